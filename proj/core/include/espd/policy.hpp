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

#ifndef ESPD_POLICY_HPP_
#define ESPD_POLICY_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "espd/env.hpp"
#include "espd/featurizer.hpp"
#include "espd/rng.hpp"

namespace espd {

// The detection head: a two-layer rectifier network over hashed features,
// producing continue/stop logits. The featurizer config is embedded so a
// parameter file can never be applied under the wrong feature space.
struct PolicyParams {
  FeaturizerConfig featurizer;
  std::uint32_t hidden = 256;
  std::vector<double> w1;  // featurizer.dim x hidden, row-major by feature
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden x 2, row-major by hidden unit
  std::vector<double> b2;  // 2

  double& w1_at(std::uint32_t feature, std::uint32_t unit) {
    return w1[static_cast<std::size_t>(feature) * hidden + unit];
  }
  double w1_at(std::uint32_t feature, std::uint32_t unit) const {
    return w1[static_cast<std::size_t>(feature) * hidden + unit];
  }
};

// Seeded random initialization. Hidden weights are unit-variance over the
// (unit-norm) feature vector; output weights start small.
PolicyParams init_policy(const FeaturizerConfig& config, std::uint32_t hidden,
                         std::uint64_t seed);

struct ActionDistribution {
  double p_continue = 0.5;
  double p_stop = 0.5;
};

// Forward activations kept for backprop.
struct ForwardPass {
  std::vector<double> pre_hidden;  // before the rectifier
  std::vector<double> hidden;
  double logits[2] = {0.0, 0.0};
  double log_probs[2] = {0.0, 0.0};
  double probs[2] = {0.5, 0.5};
};

ForwardPass forward_pass(const PolicyParams& params, const SparseVector& x);

// Strictly positive probabilities summing to 1 (log-sum-exp normalization).
// Throws ValidationError on non-finite parameters or features.
ActionDistribution action_distribution(const PolicyParams& params,
                                       const SparseVector& x);

enum class ActMode { kSample, kGreedy };

// Greedy takes the argmax with Continue on exact ties; Sample draws from
// the distribution using `rng` (required for kSample).
Action act(const PolicyParams& params, const SparseVector& x, ActMode mode,
           Rng* rng = nullptr);

// Gradient accumulator. w1 rows are kept sparse (only features that
// actually occurred); everything else is dense.
struct GradBuffer {
  std::uint32_t hidden = 0;
  std::unordered_map<std::uint32_t, std::vector<double>> w1_rows;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;

  void reset(std::uint32_t hidden_width);
  bool all_finite() const;
};

// Adds coefficient * d(log pi(action | x))/d(theta) into the buffer.
void accumulate_log_prob_grad(const PolicyParams& params, const SparseVector& x,
                              const ForwardPass& fwd, Action action,
                              double coefficient, GradBuffer* grad);

// Versioned binary parameter file with the featurizer config embedded.
void save_policy(const PolicyParams& params, const std::string& path);
PolicyParams load_policy(const std::string& path);

// Human-readable dump (weights included); used by --export-json.
std::string policy_to_json(const PolicyParams& params);

// Digest over all weights and the featurizer config; used by determinism
// checks and the run manifest.
std::uint64_t policy_digest(const PolicyParams& params);

}  // namespace espd

#endif  // ESPD_POLICY_HPP_
