/*
 Copyright 2026 The koopdev Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "commands.hpp"

#include <filesystem>
#include <fstream>

#include "koopdev/io.hpp"

namespace koopdev::cli {

namespace {

std::string output_path(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.out);
  return (std::filesystem::path(config.out) / name).string();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

void check_model(const RunConfig& config, const ControlAffineSystem& system,
                 const LiftedBilinearModel& model) {
  if (model.basis.state_dim() != system.state_dim() || model.input_dim != system.input_dim()) {
    throw InvalidArgument("model dimensions do not match plant '" + config.plant + "'");
  }
  if (static_cast<int>(config.qbar.size()) != system.state_dim() ||
      static_cast<int>(config.r.size()) != system.input_dim()) {
    throw InvalidArgument("qbar / r sizes do not match plant '" + config.plant + "'");
  }
}

LiftedBilinearModel load_model(const std::string& path) {
  auto in = open_input(path);
  return read_model_json(in);
}

}  // namespace

std::string cmd_gen_data(const RunConfig& config, std::ostream& log) {
  config.validate();
  const ControlAffineSystem system = make_builtin_system(config.plant);
  const DataSet data = collect_data(system, config.data_config(), Parallelism{config.jobs});
  const std::string path = output_path(config, "data.csv");
  auto out = open_output(path);
  write_dataset_csv(out, data, config.digest());
  log << "snapshots: " << data.size() << " (" << data.n_traj << " trajectories)\n"
      << "excitation: " << data.excitation << '\n'
      << "wrote " << path << '\n';
  return path;
}

std::string cmd_identify(const RunConfig& config, const std::string& data_path,
                         std::ostream& log) {
  config.validate();
  auto in = open_input(data_path);
  const DataSet data = read_dataset_csv(in);
  const DictionaryBasis basis = build_monomial_basis(data.state_dim, config.degree);
  LiftedBilinearModel model =
      identify_model(data, basis, config.identify_config(), Parallelism{config.jobs});
  model.config_digest = config.digest();
  const std::string path = output_path(config, "model.json");
  auto out = open_output(path);
  write_model_json(out, model);
  log << "lifted_dim: " << model.lifted_dim() << "  regressor rank: " << model.rank << '/'
      << model.full_rank << '\n'
      << "residual norms: max " << format_number(model.residual_stats.max) << "  mean "
      << format_number(model.residual_stats.mean) << "  rms "
      << format_number(model.residual_stats.rms) << '\n'
      << "c1 = " << format_number(model.c1) << "  c2 = " << format_number(model.c2)
      << "  L_p = " << format_number(model.lipschitz.value) << '\n'
      << "wrote " << path << '\n';
  return path;
}

DeviationReport cmd_analyze(const RunConfig& config, const std::string& model_path,
                            std::ostream& log) {
  config.validate();
  const ControlAffineSystem system = make_builtin_system(config.plant);
  const LiftedBilinearModel model = load_model(model_path);
  check_model(config, system, model);
  const Vector x0 =
      Eigen::Map<const Vector>(config.x0.data(), static_cast<Eigen::Index>(config.x0.size()));
  require_dim(x0, system.state_dim(), "x0");
  const OcpWeights weights = config.weights(model.basis);
  AnalysisOptions options = config.analysis();
  options.region = config.region();
  const std::optional<Matrix> tail = linearization_tail_matrix(system, weights);
  const DeviationReport report =
      analyze_point(system, model, weights, x0, options, tail ? &*tail : nullptr);

  const std::string digest = config.digest();
  {
    auto out = open_output(output_path(config, "report.json"));
    write_report_json(out, report, digest);
  }
  if (report.failure.empty()) {
    Trajectory nominal;
    try {
      nominal = simulate_nominal(model, weights, x0, options.integration, options.control);
    } catch (const DivergenceError& e) {
      nominal = e.partial();
    }
    for (Vector& z : nominal.states) z = model.C * z;
    auto out = open_output(output_path(config, "nominal_trajectory.csv"));
    out << "# " << kToolName << ' ' << kToolVersion << " config_digest=" << digest << '\n';
    write_trajectory_csv(out, nominal);
  }

  const auto row = [&log](const char* name, double v) {
    log << "  " << name;
    for (std::size_t pad = std::char_traits<char>::length(name); pad < 16; ++pad) log << ' ';
    log << format_number(v) << '\n';
  };
  log << "x0 = (" << format_number(x0[0]);
  for (Eigen::Index i = 1; i < x0.size(); ++i) log << ", " << format_number(x0[i]);
  log << ")\n";
  row("V0*", report.V0_star);
  row("grad_energy", report.grad_energy);
  row("dV_max", report.delta_V_max);
  row("V_measured", report.V_measured);
  row("V*", report.V_star);
  row("V* - V0*", report.value_gap);
  row("ctrl_dev", report.ctrl_dev);
  row("ctrl_dev_bound", report.ctrl_dev_bound);
  log << "  ok_thm5         " << (report.ok_thm5 ? "yes" : "no") << '\n'
      << "  ok_thm6         " << (report.ok_thm6 ? "yes" : "no") << '\n'
      << "  flags           ";
  if (report.flags.empty()) log << "none";
  for (std::size_t i = 0; i < report.flags.size(); ++i) log << (i ? ";" : "") << report.flags[i];
  log << '\n';
  if (!report.failure.empty()) log << "  failure         " << report.failure << '\n';
  return report;
}

SweepSummary cmd_sweep(const RunConfig& config, const std::string& model_path,
                       std::ostream& log) {
  config.validate();
  const ControlAffineSystem system = make_builtin_system(config.plant);
  const LiftedBilinearModel model = load_model(model_path);
  check_model(config, system, model);
  const OcpWeights weights = config.weights(model.basis);
  AnalysisOptions options = config.analysis();
  options.region = config.region();
  const std::vector<DeviationReport> reports =
      grid_sweep(system, model, weights, config.region(), config.resolution, options,
                 Parallelism{config.jobs});
  const SweepSummary summary = summarize(reports);
  const std::string digest = config.digest();
  const std::string csv_path = output_path(config, "sweep.csv");
  {
    auto out = open_output(csv_path);
    write_sweep_csv(out, reports, digest);
  }
  const std::string json_path = output_path(config, "summary.json");
  {
    auto out = open_output(json_path);
    write_summary_json(out, summary, digest);
  }
  log << "points: " << summary.points << "  failures: " << summary.failures << '\n'
      << "value bound violations: " << summary.thm5_violations
      << "  controller bound violations: " << summary.thm6_violations
      << "  unexplained: " << summary.unexplained_violations << '\n'
      << "gap range: [" << format_number(summary.gap_min) << ", "
      << format_number(summary.gap_max) << "]  dV_max range: [" << format_number(summary.dV_min)
      << ", " << format_number(summary.dV_max) << "]\n"
      << "wrote " << csv_path << " and " << json_path << '\n';
  return summary;
}

LiftedBilinearModel build_model(const RunConfig& config) {
  config.validate();
  const ControlAffineSystem system = make_builtin_system(config.plant);
  const DataSet data = collect_data(system, config.data_config(), Parallelism{config.jobs});
  const DictionaryBasis basis = build_monomial_basis(system.state_dim(), config.degree);
  LiftedBilinearModel model =
      identify_model(data, basis, config.identify_config(), Parallelism{config.jobs});
  model.config_digest = config.digest();
  return model;
}

}  // namespace koopdev::cli
