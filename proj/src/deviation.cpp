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
#include "koopdev/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "koopdev/io.hpp"

namespace koopdev {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + " must be finite and nonnegative");
  }
}

Box analysis_region(const LiftedBilinearModel& model, const AnalysisOptions& options) {
  return options.region.value_or(model.lipschitz.region);
}

bool leaves(const Box& region, const std::vector<Vector>& states) {
  if (region.empty()) return false;
  for (const Vector& x : states) {
    if (!region.contains(x, 1e-9)) return true;
  }
  return false;
}

void add_flag(std::vector<std::string>& flags, const std::string& flag) {
  if (std::find(flags.begin(), flags.end(), flag) == flags.end()) flags.push_back(flag);
}

std::string join_flags(const std::vector<std::string>& flags) {
  if (flags.empty()) return "none";
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

// Row-major lifted running cost without the regularization term.
Matrix plain_lifted_Q(const LiftedBilinearModel& model, const OcpWeights& weights) {
  return weights.has_lifted() ? weights.lifted_Q()
                              : Matrix(model.C.transpose() * weights.Qbar() * model.C);
}

}  // namespace

double value_deviation_bound(double c1, double c2, double lipschitz, double lambda_min_Qbar,
                             double lambda_min_R, double V0_star, double grad_energy) {
  require_nonnegative(c1, "c1");
  require_nonnegative(c2, "c2");
  require_nonnegative(lipschitz, "L_p");
  require_nonnegative(V0_star, "V0*");
  require_nonnegative(grad_energy, "gradient energy");
  if (!(lambda_min_Qbar > 0.0) || !(lambda_min_R > 0.0)) {
    throw InvalidArgument("value_deviation_bound: minimum eigenvalues must be positive");
  }
  const double k = std::max(2.0 * c1 * lipschitz / std::sqrt(lambda_min_Qbar),
                            2.0 * c2 / std::sqrt(lambda_min_R));
  if (k == 0.0) return 0.0;
  return k * std::sqrt(V0_star * grad_energy);
}

double controller_deviation_bound(double delta_V_max, double V0_star) {
  require_nonnegative(delta_V_max, "delta_V_max");
  require_nonnegative(V0_star, "V0*");
  if (delta_V_max == 0.0) return 0.0;
  if (V0_star == 0.0) {
    throw InvalidArgument("controller_deviation_bound: undefined for V0* = 0 with dV > 0");
  }
  return 2.0 * delta_V_max * (1.0 + std::sqrt(1.0 + delta_V_max / V0_star));
}

double SlackPolicy::slack(double bound) const { return std::max(relative * bound, floor); }

ValueMeasurement measure_value_deviation(const ControlAffineSystem& system,
                                         const LiftedBilinearModel& model,
                                         const OcpWeights& weights, const Vector& x0,
                                         const AnalysisOptions& options,
                                         const Matrix* tail_matrix) {
  require_dim(x0, system.state_dim(), "measure_value_deviation");
  if (model.basis.state_dim() != system.state_dim() || model.input_dim != system.input_dim()) {
    throw DimensionError("measure_value_deviation: model does not match the plant");
  }
  SdreController controller(model, weights, options.control);
  ValueMeasurement out;
  bool first = true;
  const StateFeedback feedback = [&](const Vector& x) {
    NominalSolution sol = controller.at_state(x);
    if (first) {
      out.V0_star = sol.V0;
      first = false;
    }
    return sol.u0;
  };
  Trajectory traj;
  try {
    traj = integrate(system, feedback, x0, weights, options.integration);
  } catch (const DivergenceError& e) {
    traj = e.partial();
    traj.diverged = true;
  }
  const CostEstimate cost = quadratic_cost(traj, tail_matrix);
  out.V_measured = cost.total;
  out.tail_fraction = cost.tail_fraction;
  out.diverged = traj.diverged;
  out.region_exit = leaves(analysis_region(model, options), traj.states);
  return out;
}

ControllerMeasurement measure_controller_deviation(const ControlAffineSystem& system,
                                                   const LiftedBilinearModel& model,
                                                   const OcpWeights& weights, const Vector& x0,
                                                   const AnalysisOptions& options) {
  require_dim(x0, system.state_dim(), "measure_controller_deviation");
  if (!system.optimum()) {
    throw UnsupportedPlantError("measure_controller_deviation: plant '" + system.name() +
                                "' has no analytic optimal controller");
  }
  const StateFeedback& optimal = system.optimum()->controller;
  SdreController controller(model, weights, options.control);
  const Matrix& R = weights.R();
  Trajectory traj;
  try {
    traj = integrate_field(
        [&system](const Vector& x, const Vector& u) { return system.vector_field(x, u); },
        optimal,
        [&](const Vector& x, const Vector& u) {
          const Vector d = controller.at_state(x).u0 - u;
          return d.dot(R * d);
        },
        x0, options.integration);
  } catch (const DivergenceError& e) {
    traj = e.partial();
    traj.diverged = true;
  }
  ControllerMeasurement out;
  out.integral = quadratic_cost(traj).total;
  out.diverged = traj.diverged;
  out.region_exit = leaves(analysis_region(model, options), traj.states);
  return out;
}

AdversarialResult adversarial_error_sweep(const LiftedBilinearModel& model,
                                          const OcpWeights& weights, const Vector& x0,
                                          const AdversarialOptions& options, Parallelism par) {
  if (options.n_samples < 1) throw InvalidArgument("adversarial_error_sweep: n_samples < 1");
  require_dim(x0, model.basis.state_dim(), "adversarial_error_sweep");
  const AnalysisOptions& an = options.analysis;
  const Matrix Q = plain_lifted_Q(model, weights);
  const Matrix& R = weights.R();
  const int N = model.lifted_dim();

  AdversarialResult result;
  const Trajectory nominal = simulate_nominal(model, weights, x0, an.integration, an.control);
  result.V0_star = nominal.values.front();
  result.nominal_cost = quadratic_cost(nominal).total;
  result.grad_energy = gradient_energy(nominal).total;
  result.delta_V_max =
      value_deviation_bound(model.c1, model.c2, model.lipschitz.value, weights.lambda_min_Qbar(),
                            weights.lambda_min_R(), result.V0_star, result.grad_energy);
  result.slack = an.slack.slack(result.delta_V_max);

  result.samples.resize(options.n_samples);
  parallel_for(options.n_samples, par, [&](int k) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    AdversarialSample& sample = result.samples[k];
    sample.index = k;
    Vector fixed_dir = Vector::Zero(N);
    int sign = 0;  // +1 / -1: along / against grad V0*
    if (k == 0) {
      sample.kind = "zero";
    } else if (k == 1) {
      sample.kind = "worst_proxy";
      sample.scale = 1.0;
      sign = 1;
    } else if (k == 2) {
      sample.kind = "best_proxy";
      sample.scale = 1.0;
      sign = -1;
    } else {
      sample.kind = "random";
      std::normal_distribution<double> gauss;
      do {
        for (int i = 0; i < N; ++i) fixed_dir[i] = gauss(rng);
      } while (fixed_dir.norm() == 0.0);
      fixed_dir.normalize();
      sample.scale = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }

    SdreController controller(model, weights, an.control);
    Vector dir = fixed_dir;
    const double s = sample.scale;
    const auto field = [&](const Vector& z, const Vector& u) -> Vector {
      if (s == 0.0) return model.nominal_field(z, u);
      return model.nominal_field(z, u) + (s * (model.c1 * z.norm() + model.c2 * u.norm())) * dir;
    };
    const StateFeedback feedback = [&](const Vector& z) {
      NominalSolution sol = controller.at_lifted(z);
      if (sign != 0) {
        const double g = sol.gradV0.norm();
        dir = g > 0.0 ? Vector(sign * sol.gradV0 / g) : Vector::Zero(N);
      }
      return sol.u0;
    };
    Trajectory traj;
    try {
      traj = integrate_field(
          field, feedback,
          [&](const Vector& z, const Vector& u) { return 0.5 * (z.dot(Q * z) + u.dot(R * u)); },
          model.basis.lift(x0), an.integration);
    } catch (const DivergenceError& e) {
      traj = e.partial();
      traj.diverged = true;
    }
    sample.diverged = traj.diverged;
    sample.cost = quadratic_cost(traj).total;
    sample.deviation = std::abs(sample.cost - result.nominal_cost);
    sample.within_bound = sample.deviation <= result.delta_V_max + result.slack;
  });

  for (const auto& sample : result.samples) {
    result.max_V = std::max(result.max_V, sample.cost);
    result.max_deviation = std::max(result.max_deviation, sample.deviation);
    result.all_within_bound = result.all_within_bound && sample.within_bound;
  }
  return result;
}

bool DeviationReport::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

bool DeviationReport::unexplained_violation() const {
  const bool violated = !failure.empty() || !ok_thm5 || !ok_thm6;
  return violated && !has_flag("truncation_suspect") && !has_flag("region_exit");
}

DeviationReport analyze_point(const ControlAffineSystem& system, const LiftedBilinearModel& model,
                              const OcpWeights& weights, const Vector& x0,
                              const AnalysisOptions& options, const Matrix* tail_matrix) {
  DeviationReport rep;
  rep.x0 = x0;
  rep.V_star = rep.value_gap = rep.ctrl_dev = kNaN;
  try {
    require_dim(x0, system.state_dim(), "analyze_point");
    const Box region = analysis_region(model, options);
    if (!region.empty() && !region.contains(x0, 1e-12)) add_flag(rep.flags, "region_exit");

    Trajectory nominal;
    try {
      nominal = simulate_nominal(model, weights, x0, options.integration, options.control);
    } catch (const DivergenceError& e) {
      nominal = e.partial();
      nominal.diverged = true;
    }
    if (nominal.diverged) add_flag(rep.flags, "diverged");
    rep.V0_star = nominal.values.front();
    const EnergyEstimate energy = gradient_energy(nominal);
    rep.grad_energy = nominal.diverged ? kInf : energy.total;
    rep.grad_energy_tail = energy.tail_fraction;
    if (energy.tail_fraction > options.truncation_threshold) {
      add_flag(rep.flags, "truncation_suspect");
    }
    std::vector<Vector> projected;
    projected.reserve(nominal.states.size());
    for (const Vector& z : nominal.states) projected.push_back(model.C * z);
    if (leaves(region, projected)) add_flag(rep.flags, "region_exit");

    const double lq = weights.lambda_min_Qbar(), lr = weights.lambda_min_R();
    rep.delta_V_max = std::isfinite(rep.grad_energy)
                          ? value_deviation_bound(model.c1, model.c2, model.lipschitz.value, lq,
                                                  lr, rep.V0_star, rep.grad_energy)
                          : kInf;
    const double slack5 = options.slack.slack(rep.delta_V_max);

    const ValueMeasurement vm =
        measure_value_deviation(system, model, weights, x0, options, tail_matrix);
    rep.V_measured = vm.V_measured;
    if (vm.diverged) add_flag(rep.flags, "diverged");
    if (vm.region_exit) add_flag(rep.flags, "region_exit");
    if (vm.tail_fraction > options.truncation_threshold) add_flag(rep.flags, "truncation_suspect");
    const bool plant_ok = std::abs(rep.V_measured - rep.V0_star) <= rep.delta_V_max + slack5;
    if (!plant_ok) add_flag(rep.flags, "plant_model_disagree");

    if (system.optimum()) {
      rep.V_star = system.optimum()->value(x0);
      rep.value_gap = rep.V_star - rep.V0_star;
      rep.ok_thm5 = rep.value_gap <= rep.delta_V_max + slack5;
    } else {
      add_flag(rep.flags, "no_analytic_optimum");
      rep.ok_thm5 = plant_ok;
    }

    rep.ctrl_dev_bound = std::isfinite(rep.delta_V_max)
                             ? controller_deviation_bound(rep.delta_V_max, rep.V0_star)
                             : kInf;
    rep.ok_thm6 = true;
    if (system.optimum() && options.controller_deviation) {
      const ControllerMeasurement cm =
          measure_controller_deviation(system, model, weights, x0, options);
      rep.ctrl_dev = cm.integral;
      if (cm.diverged) add_flag(rep.flags, "diverged");
      if (cm.region_exit) add_flag(rep.flags, "region_exit");
      rep.ok_thm6 = rep.ctrl_dev <= rep.ctrl_dev_bound + options.slack.slack(rep.ctrl_dev_bound);
    }
  } catch (const SolverError& e) {
    add_flag(rep.flags, "care_failure");
    rep.failure = e.what();
    rep.ok_thm5 = rep.ok_thm6 = false;
  } catch (const Error& e) {
    rep.failure = e.what();
    rep.ok_thm5 = rep.ok_thm6 = false;
  }
  return rep;
}

std::vector<Vector> grid_points(const Box& region, int resolution) {
  if (region.empty()) throw InvalidArgument("grid_points: empty region");
  if (resolution < 2) throw InvalidArgument("grid_points: resolution must be >= 2");
  const int n = region.dim();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(resolution);
  std::vector<Vector> points(total, Vector(n));
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (int i = n - 1; i >= 0; --i) {
      const auto idx = static_cast<double>(rest % resolution);
      rest /= resolution;
      points[k][i] =
          region.lower[i] + (region.upper[i] - region.lower[i]) * idx / (resolution - 1);
    }
  }
  return points;
}

std::vector<DeviationReport> grid_sweep(const ControlAffineSystem& system,
                                        const LiftedBilinearModel& model,
                                        const OcpWeights& weights, const Box& region,
                                        int resolution, const AnalysisOptions& options,
                                        Parallelism par) {
  const std::vector<Vector> points = grid_points(region, resolution);
  const std::optional<Matrix> tail = linearization_tail_matrix(system, weights);
  const Matrix* tail_ptr = tail ? &*tail : nullptr;
  std::vector<DeviationReport> reports(points.size());
  parallel_for(static_cast<int>(points.size()), par, [&](int k) {
    reports[k] = analyze_point(system, model, weights, points[k], options, tail_ptr);
  });
  return reports;
}

namespace reference {

std::vector<DeviationReport> grid_sweep(const ControlAffineSystem& system,
                                        const LiftedBilinearModel& model,
                                        const OcpWeights& weights, const Box& region,
                                        int resolution, const AnalysisOptions& options) {
  const std::vector<Vector> points = grid_points(region, resolution);
  const std::optional<Matrix> tail = linearization_tail_matrix(system, weights);
  const Matrix* tail_ptr = tail ? &*tail : nullptr;
  std::vector<DeviationReport> reports;
  reports.reserve(points.size());
  for (const Vector& x0 : points) {
    reports.push_back(analyze_point(system, model, weights, x0, options, tail_ptr));
  }
  return reports;
}

}  // namespace reference

SweepSummary summarize(const std::vector<DeviationReport>& reports) {
  SweepSummary s;
  s.points = reports.size();
  std::size_t gap_count = 0, dv_count = 0, thm5_pass = 0, thm6_measured = 0, thm6_pass = 0;
  s.gap_min = s.dV_min = kInf;
  s.gap_max = s.dV_max = -kInf;
  double gap_sum = 0.0, dv_sum = 0.0;
  for (const auto& r : reports) {
    if (!r.failure.empty()) ++s.failures;
    if (r.ok_thm5) {
      ++thm5_pass;
    } else {
      ++s.thm5_violations;
    }
    if (!std::isnan(r.ctrl_dev)) {
      ++thm6_measured;
      if (r.ok_thm6) {
        ++thm6_pass;
      } else {
        ++s.thm6_violations;
      }
      s.ctrl_dev_max = std::max(s.ctrl_dev_max, r.ctrl_dev);
    } else if (!r.failure.empty()) {
      ++thm6_measured;
      ++s.thm6_violations;
    }
    if (r.unexplained_violation()) ++s.unexplained_violations;
    if (std::isfinite(r.value_gap)) {
      s.gap_min = std::min(s.gap_min, r.value_gap);
      s.gap_max = std::max(s.gap_max, r.value_gap);
      gap_sum += r.value_gap;
      ++gap_count;
    }
    if (std::isfinite(r.delta_V_max) && r.failure.empty()) {
      s.dV_min = std::min(s.dV_min, r.delta_V_max);
      s.dV_max = std::max(s.dV_max, r.delta_V_max);
      dv_sum += r.delta_V_max;
      ++dv_count;
      s.ctrl_dev_bound_max = std::max(s.ctrl_dev_bound_max, r.ctrl_dev_bound);
    }
  }
  if (gap_count == 0) s.gap_min = s.gap_max = kNaN;
  if (dv_count == 0) s.dV_min = s.dV_max = kNaN;
  s.gap_mean = gap_count ? gap_sum / gap_count : kNaN;
  s.dV_mean = dv_count ? dv_sum / dv_count : kNaN;
  s.thm5_pass_rate = s.points ? static_cast<double>(thm5_pass) / s.points : 0.0;
  s.thm6_pass_rate = thm6_measured ? static_cast<double>(thm6_pass) / thm6_measured : 1.0;
  return s;
}

void write_sweep_csv(std::ostream& out, const std::vector<DeviationReport>& reports,
                     const std::string& config_digest) {
  const int n = reports.empty() ? 2 : static_cast<int>(reports.front().x0.size());
  out << "# " << kToolName << ' ' << kToolVersion << " config_digest=" << config_digest << '\n';
  for (int i = 0; i < n; ++i) out << 'x' << i + 1 << ',';
  out << "V0,grad_energy,dVmax,V_measured,V_star,gap,ctrl_dev,ctrl_dev_bound,ok_thm5,ok_thm6,"
         "diag_flags\n";
  for (const auto& r : reports) {
    for (Eigen::Index i = 0; i < r.x0.size(); ++i) out << format_number(r.x0[i]) << ',';
    const bool failed = !r.failure.empty();
    const auto num = [failed](double v) { return failed ? std::string("nan") : format_number(v); };
    out << num(r.V0_star) << ',' << num(r.grad_energy) << ',' << num(r.delta_V_max) << ','
        << num(r.V_measured) << ',' << num(r.V_star) << ',' << num(r.value_gap) << ','
        << num(r.ctrl_dev) << ',' << num(r.ctrl_dev_bound) << ',' << (r.ok_thm5 ? 1 : 0) << ','
        << (std::isnan(r.ctrl_dev) && !failed ? "na" : (r.ok_thm6 ? "1" : "0")) << ','
        << join_flags(r.flags) << '\n';
  }
}

void write_summary_json(std::ostream& out, const SweepSummary& s,
                        const std::string& config_digest) {
  const nlohmann::json j = {
      {"tool", kToolName},
      {"version", kToolVersion},
      {"config_digest", config_digest},
      {"points", s.points},
      {"failures", s.failures},
      {"violations",
       {{"thm5", s.thm5_violations},
        {"thm6", s.thm6_violations},
        {"total", s.thm5_violations + s.thm6_violations},
        {"unexplained", s.unexplained_violations}}},
      {"pass_rate", {{"thm5", number(s.thm5_pass_rate)}, {"thm6", number(s.thm6_pass_rate)}}},
      {"gap", {{"min", number(s.gap_min)}, {"max", number(s.gap_max)}, {"mean", number(s.gap_mean)}}},
      {"dVmax", {{"min", number(s.dV_min)}, {"max", number(s.dV_max)}, {"mean", number(s.dV_mean)}}},
      {"ctrl_dev", {{"max", number(s.ctrl_dev_max)}, {"bound_max", number(s.ctrl_dev_bound_max)}}},
  };
  out << j.dump(2) << '\n';
}

void write_report_json(std::ostream& out, const DeviationReport& r,
                       const std::string& config_digest) {
  const nlohmann::json j = {
      {"tool", kToolName},
      {"version", kToolVersion},
      {"config_digest", config_digest},
      {"x0", std::vector<double>(r.x0.data(), r.x0.data() + r.x0.size())},
      {"V0_star", number(r.V0_star)},
      {"grad_energy", number(r.grad_energy)},
      {"grad_energy_tail_fraction", number(r.grad_energy_tail)},
      {"delta_V_max", number(r.delta_V_max)},
      {"V_measured", number(r.V_measured)},
      {"V_star", number(r.V_star)},
      {"value_gap", number(r.value_gap)},
      {"ctrl_dev", number(r.ctrl_dev)},
      {"ctrl_dev_bound", number(r.ctrl_dev_bound)},
      {"ok_thm5", r.ok_thm5},
      {"ok_thm6", r.ok_thm6},
      {"flags", r.flags},
      {"failure", r.failure},
  };
  out << j.dump(2) << '\n';
}

}  // namespace koopdev
