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
#include "koopdev/edmd.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <json.hpp>

#include "koopdev/io.hpp"

namespace koopdev {

namespace {

void check_collection_config(const ControlAffineSystem& system, const DataCollectionConfig& c) {
  if (c.n_traj < 1) throw InvalidArgument("collect_data: n_traj must be >= 1");
  if (!(c.step > 0.0)) throw InvalidArgument("collect_data: step must be positive");
  if (!(c.t_len >= c.step)) throw InvalidArgument("collect_data: t_len must be >= step");
  if (!(c.excitation.hold > 0.0)) throw InvalidArgument("collect_data: hold must be positive");
  if (!(c.excitation.u_max >= 0.0)) throw InvalidArgument("collect_data: u_max must be >= 0");
  if (c.init_region.empty() || c.init_region.dim() != system.state_dim()) {
    throw InvalidArgument("collect_data: initial-state region does not match the system");
  }
}

std::mt19937_64 stream_for(std::uint64_t seed, int traj, int attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(traj), static_cast<std::uint32_t>(attempt)};
  return std::mt19937_64(seq);
}

// One attempt at trajectory `traj`; empty result when it diverges.
std::vector<Snapshot> simulate_excited(const ControlAffineSystem& system,
                                       const DataCollectionConfig& c, int traj, int attempt) {
  auto rng = stream_for(c.seed, traj, attempt);
  const int n = system.state_dim();
  const int m = system.input_dim();
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    std::uniform_real_distribution<double> dist(c.init_region.lower[i], c.init_region.upper[i]);
    x[i] = dist(rng);
  }
  const long long steps = std::llround(c.t_len / c.step);
  const long long levels = static_cast<long long>(std::floor(steps * c.step / c.excitation.hold)) + 1;
  std::uniform_real_distribution<double> udist(-c.excitation.u_max, c.excitation.u_max);
  std::vector<Vector> level_values(levels, Vector(m));
  for (auto& v : level_values) {
    for (int i = 0; i < m; ++i) v[i] = udist(rng);
  }

  std::vector<Snapshot> out;
  out.reserve(steps + 1);
  const double h = c.step;
  for (long long k = 0; k <= steps; ++k) {
    const double t = k * h;
    if (!x.allFinite() || x.norm() > 1e6) return {};
    const long long level =
        std::min(levels - 1, static_cast<long long>(std::floor(t / c.excitation.hold + 1e-9)));
    const Vector& u = level_values[level];
    const Vector xdot = system.vector_field(x, u);
    out.push_back(Snapshot{traj, t, x, xdot, u});
    if (k == steps) break;
    const Vector k1 = xdot;
    const Vector k2 = system.vector_field(x + 0.5 * h * k1, u);
    const Vector k3 = system.vector_field(x + 0.5 * h * k2, u);
    const Vector k4 = system.vector_field(x + h * k3, u);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

std::vector<Snapshot> collect_one(const ControlAffineSystem& system, const DataCollectionConfig& c,
                                  int traj) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto samples = simulate_excited(system, c, traj, attempt);
    if (!samples.empty()) return samples;
  }
  throw Error("collect_data: trajectory " + std::to_string(traj) + " diverged twice");
}

DataSet make_header(const ControlAffineSystem& system, const DataCollectionConfig& c) {
  DataSet data;
  data.state_dim = system.state_dim();
  data.input_dim = system.input_dim();
  data.n_traj = c.n_traj;
  data.t_len = c.t_len;
  data.step = c.step;
  data.excitation = c.excitation.describe();
  data.seed = c.seed;
  return data;
}

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ParseError("model file: matrix data length does not match its shape");
  }
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) M(i, j2) = data[i * cols + j2].get<double>();
  }
  return M;
}

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string ExcitationConfig::describe() const {
  return "piecewise-constant(u_max=" + format_number(u_max) + ",hold=" + format_number(hold) + ")";
}

DataSet collect_data(const ControlAffineSystem& system, const DataCollectionConfig& config,
                     Parallelism par) {
  check_collection_config(system, config);
  std::vector<std::vector<Snapshot>> per_traj(config.n_traj);
  parallel_for(config.n_traj, par,
               [&](int k) { per_traj[k] = collect_one(system, config, k); });
  DataSet data = make_header(system, config);
  for (auto& samples : per_traj) {
    std::move(samples.begin(), samples.end(), std::back_inserter(data.snapshots));
  }
  return data;
}

namespace reference {

DataSet collect_data(const ControlAffineSystem& system, const DataCollectionConfig& config) {
  check_collection_config(system, config);
  DataSet data = make_header(system, config);
  for (int k = 0; k < config.n_traj; ++k) {
    auto samples = collect_one(system, config, k);
    std::move(samples.begin(), samples.end(), std::back_inserter(data.snapshots));
  }
  return data;
}

}  // namespace reference

DataMatrices assemble_matrices(const DataSet& data, const DictionaryBasis& basis) {
  if (data.snapshots.empty()) throw InvalidArgument("assemble_matrices: empty data set");
  if (data.state_dim != basis.state_dim()) {
    throw DimensionError("assemble_matrices: data state_dim does not match the basis");
  }
  const int N = basis.lifted_dim();
  const int m = data.input_dim;
  const Eigen::Index T = static_cast<Eigen::Index>(data.snapshots.size());
  DataMatrices mats;
  mats.Z0.resize(N, T);
  mats.U0.resize(m, T);
  mats.bilinear.resize(static_cast<Eigen::Index>(m) * N, T);
  mats.Z1.resize(N, T);
  for (Eigen::Index j = 0; j < T; ++j) {
    const Snapshot& s = data.snapshots[j];
    require_dim(s.x, data.state_dim, "assemble_matrices x");
    require_dim(s.xdot, data.state_dim, "assemble_matrices xdot");
    require_dim(s.u, m, "assemble_matrices u");
    const Vector z = basis.lift(s.x);
    mats.Z0.col(j) = z;
    mats.U0.col(j) = s.u;
    for (int i = 0; i < m; ++i) mats.bilinear.block(i * N, j, N, 1) = s.u[i] * z;
    mats.Z1.col(j) = basis.jacobian(s.x) * s.xdot;
  }
  mats.W0.resize(N + m + static_cast<Eigen::Index>(m) * N, T);
  mats.W0 << mats.Z0, mats.U0, mats.bilinear;
  return mats;
}

Identification identify(const Matrix& W0, const Matrix& Z1, int lifted_dim, int input_dim,
                        double rtol) {
  const Eigen::Index rows = lifted_dim + input_dim + static_cast<Eigen::Index>(input_dim) * lifted_dim;
  if (W0.cols() < 1) throw InvalidArgument("identify: W0 has no columns");
  if (W0.rows() != rows) throw DimensionError("identify: W0 row count is not N + m + mN");
  if (Z1.rows() != lifted_dim || Z1.cols() != W0.cols()) {
    throw DimensionError("identify: Z1 shape does not match W0");
  }
  Identification id;
  id.full_rank = static_cast<int>(rows);
  Eigen::BDCSVD<Matrix> svd(W0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = sigma.size() > 0 ? rtol * sigma[0] : 0.0;
  Vector inv = Vector::Zero(sigma.size());
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma[k] > cutoff && sigma[k] > 0.0) {
      inv[k] = 1.0 / sigma[k];
      ++id.rank;
    }
  }
  if (id.rank < id.full_rank) {
    id.warnings.push_back("identify: regressor rank " + std::to_string(id.rank) + " < " +
                          std::to_string(id.full_rank) + "; least-norm solution on attained rank");
  }
  id.stacked = ((Z1 * svd.matrixV()) * inv.asDiagonal()) * svd.matrixU().transpose();
  id.A = id.stacked.leftCols(lifted_dim);
  id.B0 = id.stacked.middleCols(lifted_dim, input_dim);
  for (int i = 0; i < input_dim; ++i) {
    id.B.push_back(id.stacked.middleCols(lifted_dim + input_dim + i * lifted_dim, lifted_dim));
  }
  return id;
}

ResidualReport residuals(const Matrix& stacked, const Matrix& W0, const Matrix& Z1) {
  if (stacked.cols() != W0.rows() || stacked.rows() != Z1.rows() || W0.cols() != Z1.cols()) {
    throw DimensionError("residuals: inconsistent shapes");
  }
  ResidualReport rep;
  rep.R = Z1 - stacked * W0;
  rep.norms = rep.R.colwise().norm().transpose();
  return rep;
}

ErrorCoefficients fit_error_coefficients(std::span<const double> residual_norms,
                                         std::span<const double> state_norms,
                                         std::span<const double> input_norms, double beta) {
  const std::size_t T = residual_norms.size();
  if (state_norms.size() != T || input_norms.size() != T) {
    throw DimensionError("fit_error_coefficients: norm sequences differ in length");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("fit_error_coefficients: beta must be positive");
  }
  struct Line {
    double a;  // r / z
    double b;  // u / z
  };
  std::vector<Line> lines;
  double c2_floor = 0.0;
  for (std::size_t j = 0; j < T; ++j) {
    const double r = residual_norms[j], z = state_norms[j], u = input_norms[j];
    if (!(r >= 0.0) || !(z >= 0.0) || !(u >= 0.0) || !std::isfinite(r) || !std::isfinite(z) ||
        !std::isfinite(u)) {
      throw InvalidArgument("fit_error_coefficients: norms must be finite and nonnegative");
    }
    if (r == 0.0) continue;
    if (z > 0.0) {
      lines.push_back({r / z, u / z});
    } else if (u > 0.0) {
      c2_floor = std::max(c2_floor, r / u);
    } else {
      throw InfeasibleError("fit_error_coefficients: residual " + format_number(r) +
                            " at a sample with z = 0 and u = 0");
    }
  }
  if (lines.empty()) return {0.0, c2_floor};

  // c1 along the lower boundary of the feasible set
  const auto boundary = [&lines](double c2) {
    double h = -std::numeric_limits<double>::infinity();
    for (const Line& l : lines) h = std::max(h, l.a - l.b * c2);
    return h;
  };

  // Walk the upper envelope of a - b c2 rightward from c2_floor. On a segment
  // whose active line has slope -b the objective changes at rate beta - b.
  double c2 = c2_floor;
  std::size_t active = 0;
  {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const double v = lines[k].a - lines[k].b * c2;
      if (v > best || (v == best && lines[k].b < lines[active].b)) {
        best = v;
        active = k;
      }
    }
  }
  for (std::size_t hop = 0; hop <= lines.size(); ++hop) {
    const Line& cur = lines[active];
    if (cur.a - cur.b * c2 <= 0.0) break;  // c1 already 0
    if (cur.b <= beta) break;              // objective nondecreasing from here
    // next breakpoint: a flatter line overtaking the active one
    double next = std::numeric_limits<double>::infinity();
    std::size_t next_line = active;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (lines[k].b >= cur.b) continue;
      const double x = (cur.a - lines[k].a) / (cur.b - lines[k].b);
      if (x < c2) continue;
      if (x < next || (x == next && lines[k].b < lines[next_line].b)) {
        next = x;
        next_line = k;
      }
    }
    const double zero = cur.a / cur.b;  // active line reaches c1 = 0
    if (zero <= next) {
      c2 = std::max(c2, zero);
      break;
    }
    c2 = next;
    active = next_line;
  }

  double c1 = std::max(0.0, boundary(c2));
  // rounding in the division can leave a constraint short by an ulp
  for (std::size_t j = 0; j < T; ++j) {
    const double r = residual_norms[j], z = state_norms[j], u = input_norms[j];
    if (r == 0.0 || z == 0.0) continue;
    while (c1 * z + c2 * u < r) c1 = std::nextafter(c1, std::numeric_limits<double>::infinity());
  }
  return {c1, c2};
}

Matrix LiftedBilinearModel::input_matrix(const Vector& z) const {
  require_dim(z, lifted_dim(), "input_matrix");
  Matrix Bz = B0;
  for (int i = 0; i < input_dim; ++i) Bz.col(i) += B[i] * z;
  return Bz;
}

Vector LiftedBilinearModel::nominal_field(const Vector& z, const Vector& u) const {
  return A * z + input_matrix(z) * u;
}

LiftedBilinearModel identify_model(const DataSet& data, const DictionaryBasis& basis,
                                   const IdentifyConfig& config, Parallelism par) {
  const DataMatrices mats = assemble_matrices(data, basis);
  const int N = basis.lifted_dim();
  const int m = data.input_dim;
  Identification id = identify(mats.W0, mats.Z1, N, m, config.rtol);
  const ResidualReport res = residuals(id.stacked, mats.W0, mats.Z1);

  const Vector z_norms = mats.Z0.colwise().norm().transpose();
  const Vector u_norms = mats.U0.colwise().norm().transpose();
  const ErrorCoefficients coeff = fit_error_coefficients(
      std::span<const double>(res.norms.data(), res.norms.size()),
      std::span<const double>(z_norms.data(), z_norms.size()),
      std::span<const double>(u_norms.data(), u_norms.size()), config.beta);

  LiftedBilinearModel model(basis);
  model.input_dim = m;
  model.A = std::move(id.A);
  model.B0 = std::move(id.B0);
  model.B = std::move(id.B);
  model.C = basis.projection_matrix();
  model.c1 = coeff.c1;
  model.c2 = coeff.c2;
  model.lipschitz =
      lipschitz_constant(basis, config.lipschitz_region, config.lipschitz_resolution, par);
  model.residual_stats.max = res.norms.maxCoeff();
  model.residual_stats.mean = res.norms.mean();
  model.residual_stats.rms = std::sqrt(res.norms.squaredNorm() / res.norms.size());
  model.rank = id.rank;
  model.full_rank = id.full_rank;
  model.snapshots = data.snapshots.size();
  model.seed = data.seed;
  return model;
}

void write_dataset_csv(std::ostream& out, const DataSet& data, const std::string& config_digest) {
  out << "# " << kToolName << ' ' << kToolVersion << " n_traj=" << data.n_traj
      << " t_len=" << format_number(data.t_len) << " step=" << format_number(data.step)
      << " seed=" << data.seed << " excitation=" << data.excitation
      << " config_digest=" << config_digest << '\n';
  out << "traj_id,t";
  for (int i = 0; i < data.state_dim; ++i) out << ",x" << i + 1;
  for (int i = 0; i < data.state_dim; ++i) out << ",xdot" << i + 1;
  for (int i = 0; i < data.input_dim; ++i) out << ",u" << i + 1;
  out << '\n';
  for (const Snapshot& s : data.snapshots) {
    out << s.traj_id << ',' << format_number(s.t);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) out << ',' << format_number(s.x[i]);
    for (Eigen::Index i = 0; i < s.xdot.size(); ++i) out << ',' << format_number(s.xdot[i]);
    for (Eigen::Index i = 0; i < s.u.size(); ++i) out << ',' << format_number(s.u[i]);
    out << '\n';
  }
}

DataSet read_dataset_csv(std::istream& in) {
  DataSet data;
  std::map<std::string, std::string> meta;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      for (const auto& token : split(t.substr(1), ' ')) {
        const auto eq = token.find('=');
        if (eq != std::string::npos) meta[token.substr(0, eq)] = token.substr(eq + 1);
      }
      continue;
    }
    header = split(t, ',');
    break;
  }
  if (header.size() < 2 || header[0] != "traj_id" || header[1] != "t") {
    throw ParseError("data file: missing 'traj_id,t,...' header");
  }
  int n = 0, n_dot = 0, m = 0;
  for (std::size_t k = 2; k < header.size(); ++k) {
    const std::string& h = header[k];
    if (h.rfind("xdot", 0) == 0) {
      ++n_dot;
    } else if (h.rfind("x", 0) == 0) {
      ++n;
    } else if (h.rfind("u", 0) == 0) {
      ++m;
    } else {
      throw ParseError("data file: unexpected column '" + h + "'");
    }
  }
  if (n < 1 || n != n_dot || m < 1) throw ParseError("data file: inconsistent column layout");
  data.state_dim = n;
  data.input_dim = m;
  int max_traj = -1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, ',');
    if (fields.size() != header.size()) {
      throw ParseError("data file: row " + std::to_string(row) + " has wrong field count");
    }
    Snapshot s;
    s.traj_id = static_cast<int>(parse_number(fields[0]));
    s.t = parse_number(fields[1]);
    s.x.resize(n);
    s.xdot.resize(n);
    s.u.resize(m);
    for (int i = 0; i < n; ++i) s.x[i] = parse_number(fields[2 + i]);
    for (int i = 0; i < n; ++i) s.xdot[i] = parse_number(fields[2 + n + i]);
    for (int i = 0; i < m; ++i) s.u[i] = parse_number(fields[2 + 2 * n + i]);
    if (!s.x.allFinite() || !s.xdot.allFinite() || !s.u.allFinite()) {
      throw ParseError("data file: non-finite value in row " + std::to_string(row));
    }
    max_traj = std::max(max_traj, s.traj_id);
    data.snapshots.push_back(std::move(s));
  }
  data.n_traj = meta.count("n_traj") ? std::stoi(meta["n_traj"]) : max_traj + 1;
  data.t_len = meta.count("t_len") ? parse_number(meta["t_len"]) : 0.0;
  data.step = meta.count("step") ? parse_number(meta["step"]) : 0.0;
  data.seed = meta.count("seed") ? std::stoull(meta["seed"]) : 0;
  data.excitation = meta.count("excitation") ? meta["excitation"] : "";
  return data;
}

void write_model_json(std::ostream& out, const LiftedBilinearModel& model) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& alpha : model.basis.terms()) terms.push_back(alpha);
  nlohmann::json B = nlohmann::json::array();
  for (const auto& Bi : model.B) B.push_back(matrix_to_json(Bi));
  nlohmann::json j = {
      {"tool", kToolName},
      {"version", kToolVersion},
      {"config_digest", model.config_digest},
      {"seed", model.seed},
      {"basis",
       {{"state_dim", model.basis.state_dim()},
        {"max_degree", model.basis.max_degree()},
        {"terms", terms}}},
      {"input_dim", model.input_dim},
      {"A", matrix_to_json(model.A)},
      {"B0", matrix_to_json(model.B0)},
      {"B", B},
      {"C", matrix_to_json(model.C)},
      {"c1", model.c1},
      {"c2", model.c2},
      {"lipschitz",
       {{"value", model.lipschitz.value},
        {"region",
         {{"lower", vector_to_json(model.lipschitz.region.lower)},
          {"upper", vector_to_json(model.lipschitz.region.upper)}}},
        {"grid_resolution", model.lipschitz.grid_resolution}}},
      {"residual_stats",
       {{"max", model.residual_stats.max},
        {"mean", model.residual_stats.mean},
        {"rms", model.residual_stats.rms}}},
      {"identification",
       {{"rank", model.rank}, {"full_rank", model.full_rank}, {"snapshots", model.snapshots}}},
  };
  out << j.dump(2) << '\n';
}

LiftedBilinearModel read_model_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  try {
    const auto& jb = j.at("basis");
    std::vector<MultiIndex> terms = jb.at("terms").get<std::vector<MultiIndex>>();
    DictionaryBasis basis(jb.at("state_dim").get<int>(), jb.at("max_degree").get<int>(),
                          std::move(terms));
    LiftedBilinearModel model(std::move(basis));
    model.input_dim = j.at("input_dim").get<int>();
    model.A = matrix_from_json(j.at("A"));
    model.B0 = matrix_from_json(j.at("B0"));
    for (const auto& jBi : j.at("B")) model.B.push_back(matrix_from_json(jBi));
    model.C = matrix_from_json(j.at("C"));
    model.c1 = j.at("c1").get<double>();
    model.c2 = j.at("c2").get<double>();
    const auto& jl = j.at("lipschitz");
    model.lipschitz.value = jl.at("value").get<double>();
    model.lipschitz.region.lower = vector_from_json(jl.at("region").at("lower"));
    model.lipschitz.region.upper = vector_from_json(jl.at("region").at("upper"));
    model.lipschitz.grid_resolution = jl.at("grid_resolution").get<int>();
    const auto& js = j.at("residual_stats");
    model.residual_stats = {js.at("max").get<double>(), js.at("mean").get<double>(),
                            js.at("rms").get<double>()};
    if (j.contains("identification")) {
      const auto& ji = j.at("identification");
      model.rank = ji.at("rank").get<int>();
      model.full_rank = ji.at("full_rank").get<int>();
      model.snapshots = ji.at("snapshots").get<std::size_t>();
    }
    model.seed = j.value("seed", std::uint64_t{0});
    model.config_digest = j.value("config_digest", std::string());

    const int N = model.lifted_dim();
    const int m = model.input_dim;
    if (model.A.rows() != N || model.A.cols() != N || model.B0.rows() != N ||
        model.B0.cols() != m || static_cast<int>(model.B.size()) != m ||
        model.C.rows() != model.basis.state_dim() || model.C.cols() != N) {
      throw ParseError("model file: matrix shapes inconsistent with basis and input_dim");
    }
    for (const auto& Bi : model.B) {
      if (Bi.rows() != N || Bi.cols() != N) throw ParseError("model file: bad B_i shape");
    }
    if (!(model.c1 >= 0.0) || !(model.c2 >= 0.0)) {
      throw ParseError("model file: error coefficients must be nonnegative");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

}  // namespace koopdev
