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
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>

#include "commands.hpp"
#include "koopdev/deviation.hpp"

namespace {

using namespace koopdev;

double seconds(const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* kernel, double serial, double parallel, bool equal) {
  std::cout << std::left << std::setw(16) << kernel << std::right << std::fixed
            << std::setprecision(3) << std::setw(12) << serial << std::setw(12) << parallel
            << std::setw(10) << std::setprecision(2) << serial / parallel << std::setw(8)
            << (equal ? "yes" : "NO") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = 0;
  int resolution = 7;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--jobs") == 0) jobs = std::atoi(argv[i + 1]);
    if (std::strcmp(argv[i], "--resolution") == 0) resolution = std::atoi(argv[i + 1]);
  }
  const Parallelism par{jobs};
  std::cout << "threads: " << par.resolved() << '\n'
            << std::left << std::setw(16) << "kernel" << std::right << std::setw(12) << "serial_s"
            << std::setw(12) << "openmp_s" << std::setw(10) << "speedup" << std::setw(8) << "equal"
            << '\n';

  const DictionaryBasis basis = build_monomial_basis(2, 4);
  const Box region = Box::symmetric(2, 1.0);
  LipschitzEstimate ls, lp;
  const double l_serial = seconds([&] { ls = reference::lipschitz_constant(basis, region, 401); });
  const double l_par = seconds([&] { lp = lipschitz_constant(basis, region, 401, par); });
  row("lipschitz", l_serial, l_par, ls.value == lp.value);

  const ControlAffineSystem plant = paper_example_system();
  DataCollectionConfig dc;
  dc.n_traj = 400;
  DataSet ds, dp;
  const double d_serial = seconds([&] { ds = reference::collect_data(plant, dc); });
  const double d_par = seconds([&] { dp = collect_data(plant, dc, par); });
  bool same = ds.size() == dp.size();
  for (std::size_t k = 0; same && k < ds.size(); ++k) {
    same = ds.snapshots[k].x == dp.snapshots[k].x && ds.snapshots[k].u == dp.snapshots[k].u;
  }
  row("collect_data", d_serial, d_par, same);

  RunConfig config;
  const LiftedBilinearModel model = cli::build_model(config);
  const OcpWeights weights = config.weights(model.basis);
  AnalysisOptions options = config.analysis();
  options.integration.step = 1e-2;
  std::vector<DeviationReport> gs, gp;
  const double g_serial = seconds(
      [&] { gs = reference::grid_sweep(plant, model, weights, region, resolution, options); });
  const double g_par =
      seconds([&] { gp = grid_sweep(plant, model, weights, region, resolution, options, par); });
  bool same_sweep = gs.size() == gp.size();
  for (std::size_t k = 0; same_sweep && k < gs.size(); ++k) {
    same_sweep = gs[k].V_measured == gp[k].V_measured && gs[k].ctrl_dev == gp[k].ctrl_dev;
  }
  row("grid_sweep", g_serial, g_par, same_sweep);
  return 0;
}
