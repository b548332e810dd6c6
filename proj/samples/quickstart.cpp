// SPDX-License-Identifier: Apache-2.0
// Runs the easy single-camera preset end to end and prints the scores.
#include <iostream>

#include "samtrack/samtrack.hpp"

int main() {
  samtrack::PipelineOptions opt;
  opt.spec = samtrack::synth::preset("easy_single_cam");
  const auto result = samtrack::run_pipeline(opt);
  std::cout << result.report.to_text();
  std::cout << "trajectories " << result.mct.trajectories.size() << '\n';
  return 0;
}
