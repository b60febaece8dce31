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

#ifndef ESPD_ENV_HPP_
#define ESPD_ENV_HPP_

#include <string>

#include "espd/corpus.hpp"
#include "espd/metrics.hpp"

namespace espd {

enum class Action { kContinue = 0, kStop = 1 };

enum class RewardScheme {
  kSpeedControl,  // +-speed(t) on stop, +-1 at a forced end of chat
  kConstant,      // +-1 everywhere (ablation)
};

inline constexpr int kDefaultWindow = 50;

// The visible dialogue prefix at step t: the last `window` turns up to and
// including u_t.
struct EpisodeState {
  int t = 1;  // 1-based turn index
  int window = kDefaultWindow;
  bool terminal = false;
};

// Canonical text form of the history window ending at 1-based turn t:
// each turn is prefixed with its author role marker and turns are joined
// oldest-to-newest with the "|" separator token, e.g.
//   "[initiator] hi there | [respondent] hey"
std::string serialize_window(const Chat& chat, int t, int window);

// One-chat episode. The penalty rate is fixed at construction (positive
// chats: the accumulated-risk rule; negative chats: the corpus median
// negative length passed in by the caller).
class Environment {
 public:
  Environment(const Chat& chat, PenaltyRate rate, RewardScheme scheme,
              int window = kDefaultWindow);

  // Convenience constructor computing the per-chat rate.
  Environment(const Chat& chat, double median_negative_length,
              RewardScheme scheme, int window = kDefaultWindow);

  EpisodeState reset() const;

  struct StepResult {
    EpisodeState state;
    double reward = 0.0;
    bool done = false;
  };

  // Advances one turn. Stop yields +-speed(t) by the stopped turn's risk
  // label (+-1 under the constant scheme); Continue yields 0 before the
  // final turn and +1/-1 at the final turn of a negative/positive chat.
  // Throws ValidationError when called on a terminal state.
  StepResult step(const EpisodeState& state, Action action) const;

  const Chat& chat() const { return *chat_; }
  PenaltyRate rate() const { return rate_; }
  int window() const { return window_; }

 private:
  const Chat* chat_;
  PenaltyRate rate_;
  RewardScheme scheme_;
  int window_;
};

}  // namespace espd

#endif  // ESPD_ENV_HPP_
