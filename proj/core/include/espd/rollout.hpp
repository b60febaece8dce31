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

#ifndef ESPD_ROLLOUT_HPP_
#define ESPD_ROLLOUT_HPP_

#include <cstdint>
#include <vector>

#include "espd/corpus.hpp"
#include "espd/env.hpp"
#include "espd/featurizer.hpp"
#include "espd/metrics.hpp"
#include "espd/policy.hpp"

namespace espd {

// Featurized history windows for every (chat, turn) pair. Window contents
// are fixed by the corpus, so training and evaluation featurize each state
// exactly once.
struct WindowFeatureCache {
  std::vector<std::vector<SparseVector>> by_chat;  // [chat][t - 1]

  const SparseVector& at(std::size_t chat, int t) const {
    return by_chat[chat][static_cast<std::size_t>(t - 1)];
  }
};

WindowFeatureCache featurize_windows(const Corpus& corpus,
                                     const Featurizer& featurizer, int window);

// Streams one chat through the policy and reports where (if anywhere) it
// stopped. Greedy mode needs no random source.
DetectionOutcome run_episode(const Chat& chat, const PolicyParams& params,
                             const Featurizer& featurizer, int window,
                             ActMode mode, Rng* rng = nullptr);

// One outcome per chat, in corpus order. Chats are independent, so they are
// spread over `jobs` threads; sampling derives a per-chat stream from
// `seed`, making results identical for any thread count.
std::vector<DetectionOutcome> run_policy(const Corpus& corpus,
                                         const PolicyParams& params,
                                         const Featurizer& featurizer,
                                         int window, ActMode mode,
                                         std::uint64_t seed = 0, int jobs = 1);

}  // namespace espd

#endif  // ESPD_ROLLOUT_HPP_
