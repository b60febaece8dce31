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

#include "espd/rollout.hpp"

#include <algorithm>
#include <thread>

#include "espd/error.hpp"

namespace espd {

WindowFeatureCache featurize_windows(const Corpus& corpus,
                                     const Featurizer& featurizer, int window) {
  WindowFeatureCache cache;
  cache.by_chat.resize(corpus.chats.size());
  for (std::size_t c = 0; c < corpus.chats.size(); ++c) {
    const Chat& chat = corpus.chats[c];
    auto& rows = cache.by_chat[c];
    rows.reserve(chat.size());
    for (int t = 1; t <= static_cast<int>(chat.size()); ++t) {
      rows.push_back(featurizer.featurize(serialize_window(chat, t, window)));
    }
  }
  return cache;
}

DetectionOutcome run_episode(const Chat& chat, const PolicyParams& params,
                             const Featurizer& featurizer, int window,
                             ActMode mode, Rng* rng) {
  DetectionOutcome outcome;
  outcome.chat_id = chat.id;
  outcome.chat_label = chat.label;
  for (int t = 1; t <= static_cast<int>(chat.size()); ++t) {
    const SparseVector x =
        featurizer.featurize(serialize_window(chat, t, window));
    if (act(params, x, mode, rng) == Action::kStop) {
      outcome.stopped = t;
      outcome.stop_risk = chat.turns[static_cast<std::size_t>(t - 1)].risk;
      return outcome;
    }
  }
  return outcome;
}

std::vector<DetectionOutcome> run_policy(const Corpus& corpus,
                                         const PolicyParams& params,
                                         const Featurizer& featurizer,
                                         int window, ActMode mode,
                                         std::uint64_t seed, int jobs) {
  const std::size_t n = corpus.chats.size();
  std::vector<DetectionOutcome> outcomes(n);
  const Rng base(seed);

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng chat_rng = base.fork(i);
      outcomes[i] = run_episode(corpus.chats[i], params, featurizer, window,
                                mode, &chat_rng);
    }
  };

  jobs = std::max(1, jobs);
  if (jobs == 1 || n < 2) {
    worker(0, n);
    return outcomes;
  }
  const std::size_t n_threads = std::min<std::size_t>(jobs, n);
  std::vector<std::thread> threads;
  const std::size_t chunk = (n + n_threads - 1) / n_threads;
  for (std::size_t k = 0; k < n_threads; ++k) {
    const std::size_t begin = k * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(worker, begin, end);
  }
  for (auto& thread : threads) thread.join();
  return outcomes;
}

}  // namespace espd
