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

#include "espd/env.hpp"

#include <algorithm>

#include "espd/error.hpp"

namespace espd {

std::string serialize_window(const Chat& chat, int t, int window) {
  if (t < 1 || t > static_cast<int>(chat.size())) {
    throw ValidationError("serialize_window: turn index out of range");
  }
  if (window < 1) {
    throw ValidationError("serialize_window: window must be >= 1");
  }
  const int begin = std::max(1, t - window + 1);
  std::string out;
  for (int i = begin; i <= t; ++i) {
    const Turn& turn = chat.turns[static_cast<std::size_t>(i - 1)];
    if (!out.empty()) out += " | ";
    out += turn.author == Author::kInitiator ? "[initiator] " : "[respondent] ";
    out += turn.text;
  }
  return out;
}

Environment::Environment(const Chat& chat, PenaltyRate rate,
                         RewardScheme scheme, int window)
    : chat_(&chat), rate_(rate), scheme_(scheme), window_(window) {
  if (chat.turns.empty()) {
    throw ValidationError("environment requires a non-empty chat");
  }
  if (window < 1) {
    throw ValidationError("environment window must be >= 1");
  }
}

Environment::Environment(const Chat& chat, double median_negative_length,
                         RewardScheme scheme, int window)
    : Environment(chat, chat_penalty_rate(chat, median_negative_length),
                  scheme, window) {}

EpisodeState Environment::reset() const {
  EpisodeState state;
  state.t = 1;
  state.window = window_;
  state.terminal = false;
  return state;
}

Environment::StepResult Environment::step(const EpisodeState& state,
                                          Action action) const {
  if (state.terminal) {
    throw ValidationError("step called on a terminal episode state");
  }
  const int n = static_cast<int>(chat_->size());
  StepResult result;
  result.state = state;

  if (action == Action::kStop) {
    const int risk = chat_->turns[static_cast<std::size_t>(state.t - 1)].risk;
    const double magnitude =
        scheme_ == RewardScheme::kSpeedControl
            ? episode_speed(static_cast<double>(state.t), rate_)
            : 1.0;
    result.reward = risk == 1 ? magnitude : -magnitude;
    result.done = true;
    result.state.terminal = true;
    return result;
  }

  if (state.t < n) {
    result.reward = 0.0;
    result.done = false;
    result.state.t = state.t + 1;
    return result;
  }

  // Continue at the final turn: the episode ends unresolved.
  result.reward = chat_->label == 0 ? 1.0 : -1.0;
  result.done = true;
  result.state.terminal = true;
  return result;
}

}  // namespace espd
