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

#include <gtest/gtest.h>

#include <cmath>

#include "espd/error.hpp"
#include "espd/rng.hpp"
#include "oracles.hpp"

namespace espd {
namespace {

Chat make_chat(const std::string& id, int label, const std::vector<int>& risks) {
  Chat chat;
  chat.id = id;
  chat.label = label;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    Turn turn;
    turn.text = "w" + std::to_string(i);
    turn.author = i % 2 == 0 ? Author::kInitiator : Author::kRespondent;
    turn.risk = risks[i];
    turn.strategy = risks[i] == 1 ? Strategy::kG : Strategy::kOthers;
    chat.turns.push_back(turn);
  }
  return chat;
}

TEST(WindowSerialization, PrefixesRolesAndSlides) {
  const Chat chat = make_chat("c", 0, {0, 0, 0, 0, 0});
  EXPECT_EQ(serialize_window(chat, 1, 50), "[initiator] w0");
  EXPECT_EQ(serialize_window(chat, 2, 50), "[initiator] w0 | [respondent] w1");
  // W=2 at t=3 keeps only the last two turns.
  EXPECT_EQ(serialize_window(chat, 3, 2), "[respondent] w1 | [initiator] w2");
}

TEST(WindowSerialization, CapsAtWindowSize) {
  std::vector<int> risks(200, 0);
  const Chat chat = make_chat("long", 0, risks);
  const std::string window = serialize_window(chat, 120, 50);
  // 50 turns joined by 49 separators.
  std::size_t separators = 0;
  for (std::size_t pos = window.find(" | "); pos != std::string::npos;
       pos = window.find(" | ", pos + 1)) {
    ++separators;
  }
  EXPECT_EQ(separators, 49u);
  // Turns 71..120 are visible, i.e. texts w70..w119.
  EXPECT_NE(window.find("w119"), std::string::npos);
  EXPECT_NE(window.find("w70 "), std::string::npos);
  EXPECT_EQ(window.find("w69 "), std::string::npos);
}

TEST(Episode, ResetStartsAtTurnOne) {
  const Chat chat = make_chat("c", 0, {0, 0, 0, 0, 0});
  const Environment env(chat, PenaltyRate(0.1), RewardScheme::kSpeedControl);
  const EpisodeState state = env.reset();
  EXPECT_EQ(state.t, 1);
  EXPECT_FALSE(state.terminal);
}

TEST(Episode, StopOnRiskyTurnEarnsSpeed) {
  // Rate chosen so penalty at turn 2 is exactly 0.3: reward = +0.7.
  const double rate = std::log(1.3 / 0.7);
  const Chat chat = make_chat("c", 1, {0, 1, 0});
  const Environment env(chat, PenaltyRate(rate), RewardScheme::kSpeedControl);
  EpisodeState state = env.reset();
  auto step1 = env.step(state, Action::kContinue);
  EXPECT_EQ(step1.reward, 0.0);
  EXPECT_FALSE(step1.done);
  auto step2 = env.step(step1.state, Action::kStop);
  EXPECT_NEAR(step2.reward, 0.7, 1e-12);
  EXPECT_TRUE(step2.done);
}

TEST(Episode, StopOnNonRiskyFirstTurnCostsOne) {
  const Chat chat = make_chat("c", 1, {0, 1});
  const Environment env(chat, PenaltyRate(0.5), RewardScheme::kSpeedControl);
  const auto result = env.step(env.reset(), Action::kStop);
  EXPECT_DOUBLE_EQ(result.reward, -1.0);  // speed(1) = 1
  EXPECT_TRUE(result.done);
}

TEST(Episode, ForcedEndRewards) {
  const Chat negative = make_chat("n", 0, {0, 0});
  const Environment env_neg(negative, PenaltyRate(0.5), RewardScheme::kSpeedControl);
  auto s = env_neg.step(env_neg.reset(), Action::kContinue);
  auto done = env_neg.step(s.state, Action::kContinue);
  EXPECT_DOUBLE_EQ(done.reward, 1.0);
  EXPECT_TRUE(done.done);

  const Chat positive = make_chat("p", 1, {0, 1});
  const Environment env_pos(positive, PenaltyRate(0.5), RewardScheme::kSpeedControl);
  s = env_pos.step(env_pos.reset(), Action::kContinue);
  done = env_pos.step(s.state, Action::kContinue);
  EXPECT_DOUBLE_EQ(done.reward, -1.0);
  EXPECT_TRUE(done.done);
}

TEST(Episode, StopAllowedAtFinalTurn) {
  const Chat chat = make_chat("p", 1, {0, 1});
  const Environment env(chat, PenaltyRate(std::log(3.0)), RewardScheme::kSpeedControl);
  auto s = env.step(env.reset(), Action::kContinue);
  const auto result = env.step(s.state, Action::kStop);
  EXPECT_NEAR(result.reward, 0.5, 1e-12);  // speed(2) with p = ln 3
  EXPECT_TRUE(result.done);
}

TEST(Episode, ConstantSchemeUsesUnitRewards) {
  const Chat chat = make_chat("p", 1, {0, 1, 0});
  const Environment env(chat, PenaltyRate(0.7), RewardScheme::kConstant);
  auto s = env.step(env.reset(), Action::kContinue);
  const auto stop = env.step(s.state, Action::kStop);
  EXPECT_DOUBLE_EQ(stop.reward, 1.0);
  const auto wrong = env.step(env.reset(), Action::kStop);
  EXPECT_DOUBLE_EQ(wrong.reward, -1.0);
}

TEST(Episode, StepAfterTerminalRejected) {
  const Chat chat = make_chat("c", 0, {0});
  const Environment env(chat, PenaltyRate(0.5), RewardScheme::kSpeedControl);
  const auto done = env.step(env.reset(), Action::kStop);
  ASSERT_TRUE(done.done);
  EXPECT_THROW(env.step(done.state, Action::kContinue), ValidationError);
}

TEST(Episode, OnlyTerminalRewardIsNonZero) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int length = 1 + static_cast<int>(rng.bounded(20));
    std::vector<int> risks(static_cast<std::size_t>(length));
    for (int& r : risks) r = rng.bernoulli(0.3) ? 1 : 0;
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    if (label == 0) std::fill(risks.begin(), risks.end(), 0);
    const Chat chat = make_chat("t", label, risks);
    const Environment env(chat, PenaltyRate(0.2), RewardScheme::kSpeedControl);

    EpisodeState state = env.reset();
    int non_zero_rewards = 0;
    while (true) {
      const Action action = rng.bernoulli(0.2) ? Action::kStop : Action::kContinue;
      const auto result = env.step(state, action);
      if (result.reward != 0.0) {
        ++non_zero_rewards;
        EXPECT_TRUE(result.done) << "non-zero reward before termination";
      }
      EXPECT_LE(std::abs(result.reward), 1.0);
      if (result.done) break;
      state = result.state;
    }
    EXPECT_LE(non_zero_rewards, 1);
  }
}

TEST(Episode, StopRewardSignFollowsRiskLabel) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int length = 1 + static_cast<int>(rng.bounded(12));
    std::vector<int> risks(static_cast<std::size_t>(length));
    for (int& r : risks) r = rng.bernoulli(0.5) ? 1 : 0;
    const Chat chat = make_chat("t", 1, risks);
    const Environment env(chat, PenaltyRate(0.15), RewardScheme::kSpeedControl);
    EpisodeState state = env.reset();
    const int stop_at = 1 + static_cast<int>(rng.bounded(length));
    for (int t = 1; t < stop_at; ++t) {
      state = env.step(state, Action::kContinue).state;
    }
    const auto result = env.step(state, Action::kStop);
    const int risk = risks[static_cast<std::size_t>(stop_at - 1)];
    EXPECT_EQ(result.reward > 0, risk == 1);
  }
}

// Exhaustive enumeration of stop/continue assignments on short chats: the
// never-stop policy maximizes return on negative chats, and stopping at the
// earliest risky turn maximizes return on positive chats under the
// speed-control scheme. The acceptance suite sweeps length up to 12.
TEST(Episode, ExhaustivePolicySweepSmall) {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int length = 2 + static_cast<int>(rng.bounded(7));
    const bool positive = rng.bernoulli(0.5);
    std::vector<int> risks(static_cast<std::size_t>(length), 0);
    int first_risky = 0;
    if (positive) {
      for (int t = 0; t < length; ++t) {
        if (rng.bernoulli(0.4)) {
          risks[static_cast<std::size_t>(t)] = 1;
          if (first_risky == 0) first_risky = t + 1;
        }
      }
      if (first_risky == 0) {
        risks[static_cast<std::size_t>(length - 1)] = 1;
        first_risky = length;
      }
    }
    const Chat chat = make_chat("t", positive ? 1 : 0, risks);
    const double rate = 0.05 + rng.uniform();
    const auto sweep = oracle::enumerate_policies(chat, rate, true);
    if (!positive) {
      EXPECT_DOUBLE_EQ(sweep.best_return, 1.0);
      ASSERT_EQ(sweep.best_stop_turns.size(), 1u);
      EXPECT_EQ(sweep.best_stop_turns[0], 0);  // never stops
    } else {
      ASSERT_EQ(sweep.best_stop_turns.size(), 1u);
      EXPECT_EQ(sweep.best_stop_turns[0], first_risky);
      const Environment env(chat, PenaltyRate(rate), RewardScheme::kSpeedControl);
      EpisodeState state = env.reset();
      for (int t = 1; t < first_risky; ++t) {
        state = env.step(state, Action::kContinue).state;
      }
      EXPECT_NEAR(env.step(state, Action::kStop).reward, sweep.best_return,
                  1e-12);
    }
  }
}

}  // namespace
}  // namespace espd
