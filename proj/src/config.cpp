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
#include "koopdev/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>
#include <variant>

#include "koopdev/io.hpp"

namespace koopdev {

namespace {

using FieldRef = std::variant<int*, double*, std::uint64_t*, std::string*, std::vector<double>*>;

std::vector<std::pair<const char*, FieldRef>> fields(RunConfig& c) {
  return {
      {"plant", &c.plant},
      {"degree", &c.degree},
      {"n_traj", &c.n_traj},
      {"t_len", &c.t_len},
      {"data_step", &c.data_step},
      {"u_max", &c.u_max},
      {"hold", &c.hold},
      {"seed", &c.seed},
      {"qbar", &c.qbar},
      {"r", &c.r},
      {"beta", &c.beta},
      {"regularization", &c.regularization},
      {"rtol", &c.rtol},
      {"region_lower", &c.region_lower},
      {"region_upper", &c.region_upper},
      {"resolution", &c.resolution},
      {"lipschitz_resolution", &c.lipschitz_resolution},
      {"horizon", &c.horizon},
      {"step", &c.step},
      {"stop_norm", &c.stop_norm},
      {"divergence_guard", &c.divergence_guard},
      {"slack_relative", &c.slack_relative},
      {"slack_floor", &c.slack_floor},
      {"truncation_threshold", &c.truncation_threshold},
      {"adversarial_samples", &c.adversarial_samples},
      {"adversarial_points", &c.adversarial_points},
      {"x0", &c.x0},
      {"out", &c.out},
      {"jobs", &c.jobs},
  };
}

long long parse_integer(const std::string& key, const std::string& text) {
  const double v = parse_number(text);
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw ParseError("config: '" + key + "' expects an integer, got '" + text + "'");
  }
  return static_cast<long long>(v);
}

std::string render(const FieldRef& ref) {
  struct Visitor {
    std::string operator()(int* v) const { return std::to_string(*v); }
    std::string operator()(double* v) const { return format_number(*v); }
    std::string operator()(std::uint64_t* v) const { return std::to_string(*v); }
    std::string operator()(std::string* v) const { return *v; }
    std::string operator()(std::vector<double>* v) const {
      std::string out;
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (i > 0) out += ',';
        out += format_number((*v)[i]);
      }
      return out;
    }
  };
  return std::visit(Visitor{}, ref);
}

void positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string("config: ") + what + " must be positive");
  }
}

Matrix diagonal(const std::vector<double>& d) {
  Vector v = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
  return v.asDiagonal();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (auto& [name, ref] : fields(*this)) {
    if (key != name) continue;
    const std::string v = trim(value);
    if (auto* p = std::get_if<int*>(&ref)) {
      **p = static_cast<int>(parse_integer(key, v));
    } else if (auto* p = std::get_if<double*>(&ref)) {
      **p = parse_number(v);
    } else if (auto* p = std::get_if<std::uint64_t*>(&ref)) {
      const long long n = parse_integer(key, v);
      if (n < 0) throw ParseError("config: '" + key + "' must be nonnegative");
      **p = static_cast<std::uint64_t>(n);
    } else if (auto* p = std::get_if<std::string*>(&ref)) {
      **p = v;
    } else {
      auto* list = std::get<std::vector<double>*>(ref);
      list->clear();
      for (const auto& item : split(v, ',')) list->push_back(parse_number(item));
    }
    return;
  }
  throw InvalidArgument("config: unknown key '" + key + "'");
}

void RunConfig::validate() const {
  if (degree < 1) throw InvalidArgument("config: degree must be >= 1");
  if (n_traj < 1) throw InvalidArgument("config: n_traj must be >= 1");
  positive(data_step, "data_step");
  positive(hold, "hold");
  if (!(t_len >= data_step)) throw InvalidArgument("config: t_len must be >= data_step");
  if (!(u_max >= 0.0)) throw InvalidArgument("config: u_max must be >= 0");
  for (double q : qbar) positive(q, "qbar entries");
  for (double v : r) positive(v, "r entries");
  positive(beta, "beta");
  if (!(regularization >= 0.0)) throw InvalidArgument("config: regularization must be >= 0");
  positive(rtol, "rtol");
  if (region_lower.size() != qbar.size() || region_upper.size() != qbar.size()) {
    throw InvalidArgument("config: region and qbar must have the state dimension");
  }
  if (region().empty()) throw InvalidArgument("config: empty region");
  if (resolution < 2 || lipschitz_resolution < 2) {
    throw InvalidArgument("config: resolutions must be >= 2");
  }
  positive(step, "step");
  if (!(horizon >= step)) throw InvalidArgument("config: horizon must be >= step");
  if (!(stop_norm >= 0.0)) throw InvalidArgument("config: stop_norm must be >= 0");
  positive(divergence_guard, "divergence_guard");
  if (!(slack_relative >= 0.0) || !(slack_floor >= 0.0)) {
    throw InvalidArgument("config: slack must be >= 0");
  }
  if (!(truncation_threshold >= 0.0)) {
    throw InvalidArgument("config: truncation_threshold must be >= 0");
  }
  if (adversarial_samples < 1 || adversarial_points < 1) {
    throw InvalidArgument("config: adversarial counts must be >= 1");
  }
  if (jobs < 0) throw InvalidArgument("config: jobs must be >= 0");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (auto& [name, ref] : fields(const_cast<RunConfig&>(*this))) {
    out += name;
    out += " = ";
    out += render(ref);
    out += '\n';
  }
  return out;
}

std::string RunConfig::digest() const {
  RunConfig canonical = *this;
  canonical.out.clear();
  canonical.jobs = 0;
  return digest_hex(canonical.to_text());
}

Box RunConfig::region() const {
  return Box{Eigen::Map<const Vector>(region_lower.data(), static_cast<Eigen::Index>(region_lower.size())),
             Eigen::Map<const Vector>(region_upper.data(), static_cast<Eigen::Index>(region_upper.size()))};
}

DataCollectionConfig RunConfig::data_config() const {
  DataCollectionConfig c;
  c.n_traj = n_traj;
  c.t_len = t_len;
  c.step = data_step;
  c.init_region = region();
  c.excitation.u_max = u_max;
  c.excitation.hold = hold;
  c.seed = seed;
  return c;
}

IdentifyConfig RunConfig::identify_config() const {
  IdentifyConfig c;
  c.lipschitz_region = region();
  c.lipschitz_resolution = lipschitz_resolution;
  c.beta = beta;
  c.rtol = rtol;
  return c;
}

IntegrationOptions RunConfig::integration() const {
  IntegrationOptions o;
  o.horizon = horizon;
  o.step = step;
  o.stop_norm = stop_norm;
  o.divergence_guard = divergence_guard;
  return o;
}

AnalysisOptions RunConfig::analysis() const {
  AnalysisOptions o;
  o.integration = integration();
  o.control.regularization = regularization;
  o.slack.relative = slack_relative;
  o.slack.floor = slack_floor;
  o.truncation_threshold = truncation_threshold;
  return o;
}

OcpWeights RunConfig::weights(const DictionaryBasis& basis) const {
  return OcpWeights(diagonal(qbar), diagonal(r), basis);
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    config.set(trim(body.substr(0, eq)), body.substr(eq + 1));
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace koopdev
