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

#ifndef ESPD_BASELINE_HPP_
#define ESPD_BASELINE_HPP_

#include <functional>
#include <optional>
#include <vector>

#include "espd/corpus.hpp"
#include "espd/metrics.hpp"
#include "espd/training.hpp"

namespace espd {

// Two-tier sliding-window detector: Tier 1 classifies the trailing message
// window at every turn, Tier 2 stops once `skepticism` of the last `span`
// windows were classified positive.
struct TwoTierConfig {
  int window_size = 50;
  int span = 10;
  int skepticism = 5;
};

void validate_config(const TwoTierConfig& config);

// Tier 2 alone: given per-turn window labels, the first index (1-based)
// where the trailing-span positive count reaches the skepticism threshold.
// Before `span` windows exist, positives are counted among the windows
// seen so far.
std::optional<int> two_tier_stop_index(const std::vector<bool>& window_labels,
                                       int span, int skepticism);

// Tier 1 contract: any scorer over the serialized message window.
using WindowClassifier = std::function<bool(const std::string& window_text)>;

// Slides a window one message at a time (window t covers the last
// window_size messages up to turn t; shorter chats simply yield shorter
// windows) and reports a stop at the last message of the triggering window.
DetectionOutcome two_tier_detect(const Chat& chat,
                                 const WindowClassifier& classifier,
                                 const TwoTierConfig& config);

// Weakly supervised Tier-1 model: every window drawn from a chat is
// labeled with that chat's label. Reuses the detection-head trainer.
struct WindowClassifierModel {
  PolicyParams params;
};

WindowClassifierModel train_window_classifier(const Corpus& corpus,
                                              const Featurizer& featurizer,
                                              const SftConfig& config,
                                              const TwoTierConfig& two_tier);

WindowClassifier make_window_classifier(const WindowClassifierModel& model,
                                        const Featurizer& featurizer);

// One outcome per chat, in corpus order.
std::vector<DetectionOutcome> run_baseline(const Corpus& corpus,
                                           const WindowClassifierModel& model,
                                           const Featurizer& featurizer,
                                           const TwoTierConfig& config,
                                           int jobs = 1);

}  // namespace espd

#endif  // ESPD_BASELINE_HPP_
