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

#ifndef ESPD_TRAINING_HPP_
#define ESPD_TRAINING_HPP_

#include <cstdint>
#include <vector>

#include "espd/corpus.hpp"
#include "espd/env.hpp"
#include "espd/policy.hpp"
#include "espd/rollout.hpp"

namespace espd {

// Adam with lazy first-layer updates: moments and weights of a feature row
// move only when the row occurred in the batch, with the global step used
// for bias correction. Dense moments for the small tensors.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const PolicyParams& params, double beta1 = 0.9,
                         double beta2 = 0.999, double epsilon = 1e-8);

  // One descent step: params -= lr * adamized(grad).
  void step(PolicyParams* params, const GradBuffer& grad, double lr);

 private:
  double beta1_, beta2_, epsilon_;
  long step_count_ = 0;
  std::vector<double> m_w1_, v_w1_;
  std::vector<double> m_b1_, v_b1_;
  std::vector<double> m_w2_, v_w2_;
  std::vector<double> m_b2_, v_b2_;
};

struct SftConfig {
  double learning_rate = 5e-5;
  std::uint32_t batch_size = 32;
  std::uint32_t epochs = 10;
  // Multiplier on the loss of risky-turn examples; 1 disables weighting.
  double class_weight = 1.0;
  // When non-zero, train on at most this many negative chats, preferring
  // chats longer than 100 turns.
  std::size_t max_negatives = 0;
  std::uint32_t hidden = 256;
  int window = kDefaultWindow;
  std::uint64_t seed = 1;
};

struct SftResult {
  PolicyParams params;
  // Training-set loss before training (index 0) and after each epoch.
  std::vector<double> epoch_losses;
  // Chats actually trained on (after the negative sampling rule).
  std::vector<std::string> training_chat_ids;
};

// Supervised fine-tuning of the detection head on turn-level risk labels:
// minimizes the per-chat-normalized cross-entropy between the head's stop
// probability and y_t over every turn, double-averaged over chats and over
// turns within a chat. Deterministic for a fixed seed. Throws
// ValidationError when the corpus has a single class and DivergenceError on
// a non-finite loss or gradient. Training starts from `init` when given
// (its featurizer must match), otherwise from a fresh seeded
// initialization.
SftResult sft_train(const Corpus& corpus, const Featurizer& featurizer,
                    const SftConfig& config,
                    const PolicyParams* init = nullptr);

// Mean per-chat-normalized cross-entropy of `params` on the corpus.
double sft_loss(const Corpus& corpus, const WindowFeatureCache& cache,
                const PolicyParams& params, double class_weight = 1.0);

struct RlConfig {
  double learning_rate = 2e-4;  // base rate; also the between-peaks floor
  std::uint32_t epochs = 50;
  std::uint32_t batch_size = 32;
  double discount = 0.99;
  // Cosine-annealed warm restarts.
  std::uint32_t period = 10;      // epochs per restart cycle
  std::uint32_t period_mult = 1;  // cycle length multiplier after a restart
  double peak_lr = 0.1;
  std::uint32_t warmup = 1;  // epochs of linear ramp to the cycle's peak
  double peak_decay = 0.5;   // peak multiplier applied at each restart
  RewardScheme scheme = RewardScheme::kSpeedControl;
  // Apply the update exactly as a descent on log-likelihood-times-return
  // instead of ascent on expected return. Off by default; kept for
  // comparison.
  bool literal_update_sign = false;
  int window = kDefaultWindow;
  std::uint64_t seed = 2;
};

// Learning rate for a (0-based) epoch index: linear warmup from the base
// rate to the cycle's peak, cosine decay back to the base rate, peak scaled
// by peak_decay after every restart.
double lr_at(std::uint32_t step, const RlConfig& config);

struct RlResult {
  PolicyParams params;
  std::vector<double> epoch_mean_returns;
};

// REINFORCE on whole episodes: actions are sampled from the policy, every
// visited step receives the discounted terminal reward, and only the head
// parameters move (the featurizer has none). Deterministic for a fixed
// seed. Throws DivergenceError on a non-finite gradient.
RlResult reinforce_train(const Corpus& corpus, const PolicyParams& init,
                         const RlConfig& config);

}  // namespace espd

#endif  // ESPD_TRAINING_HPP_
