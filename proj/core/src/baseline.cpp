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

#include "espd/baseline.hpp"

#include <algorithm>
#include <thread>

#include "espd/env.hpp"
#include "espd/error.hpp"

namespace espd {

void validate_config(const TwoTierConfig& config) {
  if (config.window_size < 1) {
    throw ValidationError("two-tier window size must be >= 1");
  }
  if (config.span < 1) {
    throw ValidationError("two-tier span must be >= 1");
  }
  if (config.skepticism < 1 || config.skepticism > config.span) {
    throw ValidationError("skepticism must be in [1, span]");
  }
}

std::optional<int> two_tier_stop_index(const std::vector<bool>& window_labels,
                                       int span, int skepticism) {
  int positives_in_span = 0;
  for (std::size_t i = 0; i < window_labels.size(); ++i) {
    if (window_labels[i]) ++positives_in_span;
    if (i >= static_cast<std::size_t>(span) &&
        window_labels[i - static_cast<std::size_t>(span)]) {
      --positives_in_span;
    }
    if (positives_in_span >= skepticism) {
      return static_cast<int>(i) + 1;
    }
  }
  return std::nullopt;
}

DetectionOutcome two_tier_detect(const Chat& chat,
                                 const WindowClassifier& classifier,
                                 const TwoTierConfig& config) {
  validate_config(config);
  DetectionOutcome outcome;
  outcome.chat_id = chat.id;
  outcome.chat_label = chat.label;

  int positives_in_span = 0;
  std::vector<bool> labels;
  labels.reserve(chat.size());
  for (int t = 1; t <= static_cast<int>(chat.size()); ++t) {
    const bool positive =
        classifier(serialize_window(chat, t, config.window_size));
    labels.push_back(positive);
    if (positive) ++positives_in_span;
    const int leaving = t - config.span;
    if (leaving >= 1 && labels[static_cast<std::size_t>(leaving - 1)]) {
      --positives_in_span;
    }
    if (positives_in_span >= config.skepticism) {
      outcome.stopped = t;
      outcome.stop_risk = chat.turns[static_cast<std::size_t>(t - 1)].risk;
      return outcome;
    }
  }
  return outcome;
}

WindowClassifierModel train_window_classifier(const Corpus& corpus,
                                              const Featurizer& featurizer,
                                              const SftConfig& config,
                                              const TwoTierConfig& two_tier) {
  validate_config(two_tier);
  // Weak supervision: every window inherits its chat's label.
  Corpus weak = corpus;
  for (Chat& chat : weak.chats) {
    for (Turn& turn : chat.turns) turn.risk = chat.label;
  }
  weak.relaxed_labels = true;
  SftConfig window_config = config;
  window_config.window = two_tier.window_size;
  WindowClassifierModel model;
  model.params = sft_train(weak, featurizer, window_config).params;
  return model;
}

WindowClassifier make_window_classifier(const WindowClassifierModel& model,
                                        const Featurizer& featurizer) {
  return [&model, &featurizer](const std::string& window_text) {
    const SparseVector x = featurizer.featurize(window_text);
    return action_distribution(model.params, x).p_stop > 0.5;
  };
}

std::vector<DetectionOutcome> run_baseline(const Corpus& corpus,
                                           const WindowClassifierModel& model,
                                           const Featurizer& featurizer,
                                           const TwoTierConfig& config,
                                           int jobs) {
  validate_config(config);
  const std::size_t n = corpus.chats.size();
  std::vector<DetectionOutcome> outcomes(n);

  auto worker = [&](std::size_t begin, std::size_t end) {
    const WindowClassifier classifier = make_window_classifier(model, featurizer);
    for (std::size_t i = begin; i < end; ++i) {
      outcomes[i] = two_tier_detect(corpus.chats[i], classifier, config);
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
