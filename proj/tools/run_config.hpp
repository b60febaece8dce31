// Copyright 2026 The espd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ESPD_TOOLS_RUN_CONFIG_HPP_
#define ESPD_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "espd/baseline.hpp"
#include "espd/featurizer.hpp"
#include "espd/metrics.hpp"
#include "espd/synthgen.hpp"
#include "espd/training.hpp"

namespace espd::cli {

// Everything a run needs, assembled from one sectioned key=value file.
// Sections mirror the library configs; unknown keys are rejected.
struct RunConfig {
  GenConfig gen;
  FeaturizerConfig featurizer;
  SftConfig sft;
  RlConfig rl;
  TwoTierConfig two_tier;
  EvalOptions eval_options;
  EvalMode eval_mode = EvalMode::kTurnLevel;
  ActMode eval_act = ActMode::kGreedy;
  std::uint64_t eval_seed = 3;
};

RunConfig load_run_config(const std::string& path);

// Canonical flat dump of the effective config (sorted keys), used for the
// manifest and its digest.
std::map<std::string, std::string> config_items(const RunConfig& config);
std::string config_digest(const RunConfig& config);

}  // namespace espd::cli

#endif  // ESPD_TOOLS_RUN_CONFIG_HPP_
