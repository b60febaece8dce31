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

#include "espd/training.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "espd/error.hpp"
#include "espd/synthgen.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace espd {
namespace {

TEST(LrSchedule, SpecAnchors) {
  const RlConfig config;  // base 2e-4, T_0 10, peak 0.1, warmup 1, decay 0.5
  EXPECT_DOUBLE_EQ(lr_at(0, config), 2e-4);        // start of warmup
  EXPECT_DOUBLE_EQ(lr_at(1, config), 0.1);         // warmup peak
  EXPECT_DOUBLE_EQ(lr_at(10, config), 2e-4);       // restart
  EXPECT_DOUBLE_EQ(lr_at(11, config), 0.05);       // decayed peak
  EXPECT_DOUBLE_EQ(lr_at(21, config), 0.025);      // third cycle peak
}

TEST(LrSchedule, CosineDecaysBetweenPeakAndBase) {
  const RlConfig config;
  double previous = lr_at(1, config);
  for (std::uint32_t step = 2; step < 10; ++step) {
    const double lr = lr_at(step, config);
    EXPECT_LT(lr, previous);
    EXPECT_GT(lr, config.learning_rate);
    previous = lr;
  }
}

TEST(LrSchedule, ValidatesShape) {
  RlConfig config;
  config.warmup = config.period;
  EXPECT_THROW(lr_at(0, config), ValidationError);
  config = RlConfig{};
  config.period = 0;
  EXPECT_THROW(lr_at(0, config), ValidationError);
}

GenConfig toy_config(std::uint64_t seed, double hard_fraction = 0.0) {
  GenConfig config;
  config.n_positive = 10;
  config.n_negative = 40;
  config.positive_length_mean = 30;
  config.positive_length_std = 8;
  config.negative_length_mean = 12;
  config.negative_length_std = 4;
  config.hard_negative_fraction = hard_fraction;
  config.pi_fraction = 0.35;
  config.g_fraction = 0.45;
  config.a_fraction = 0.20;
  config.seed = seed;
  return config;
}

FeaturizerConfig toy_featurizer() {
  FeaturizerConfig config;
  config.dim = 1u << 12;
  return config;
}

SftConfig toy_sft() {
  SftConfig config;
  config.learning_rate = 0.01;
  config.epochs = 12;
  config.hidden = 16;
  config.window = 20;
  config.seed = 7;
  return config;
}

TEST(Sft, ZeroParametersGiveLogTwoLoss) {
  const Corpus corpus = generate(toy_config(1));
  const Featurizer featurizer(toy_featurizer());
  PolicyParams zeros;
  zeros.featurizer = featurizer.config();
  zeros.hidden = 4;
  zeros.w1.assign(static_cast<std::size_t>(zeros.featurizer.dim) * 4, 0.0);
  zeros.b1.assign(4, 0.0);
  zeros.w2.assign(8, 0.0);
  zeros.b2.assign(2, 0.0);
  const WindowFeatureCache cache = featurize_windows(corpus, featurizer, 20);
  EXPECT_NEAR(sft_loss(corpus, cache, zeros), std::log(2.0), 1e-12);
}

TEST(Sft, LearnsSeparableCorpus) {
  GenConfig gen = toy_config(11);
  gen.positive_length_mean = 40;
  const Corpus train = generate(gen);
  gen.seed = 12;
  const Corpus held_out = generate(gen);
  const Featurizer featurizer(toy_featurizer());
  SftConfig config = toy_sft();
  config.learning_rate = 0.02;
  config.epochs = 25;
  const SftResult result = sft_train(train, featurizer, config);

  ASSERT_EQ(result.epoch_losses.size(), config.epochs + 1u);
  EXPECT_NEAR(result.epoch_losses.front(), std::log(2.0), 0.2);
  EXPECT_LT(result.epoch_losses.back(), result.epoch_losses.front() * 0.5);
  const double f1 =
      testutil::per_turn_f1(held_out, result.params, featurizer, config.window);
  EXPECT_GE(f1, 0.95) << "held-out per-turn F1";
}

TEST(Sft, LossTraceIsNonIncreasingUpToNoise) {
  const Corpus train = generate(toy_config(21));
  const Featurizer featurizer(toy_featurizer());
  const SftResult result = sft_train(train, featurizer, toy_sft());
  for (std::size_t i = 1; i < result.epoch_losses.size(); ++i) {
    EXPECT_LE(result.epoch_losses[i], result.epoch_losses[i - 1] + 0.02);
  }
}

TEST(Sft, DeterministicForFixedSeed) {
  const Corpus train = generate(toy_config(31));
  const Featurizer featurizer(toy_featurizer());
  SftConfig config = toy_sft();
  config.epochs = 3;
  const SftResult a = sft_train(train, featurizer, config);
  const SftResult b = sft_train(train, featurizer, config);
  EXPECT_EQ(policy_digest(a.params), policy_digest(b.params));
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  config.seed += 1;
  const SftResult c = sft_train(train, featurizer, config);
  EXPECT_NE(policy_digest(c.params), policy_digest(a.params));
}

TEST(Sft, SingleClassCorpusRejected) {
  GenConfig config = toy_config(41);
  config.n_positive = 0;
  const Corpus negatives_only = generate(config);
  const Featurizer featurizer(toy_featurizer());
  EXPECT_THROW(sft_train(negatives_only, featurizer, toy_sft()),
               ValidationError);
}

TEST(Sft, LabelInversionMirrorsPredictions) {
  const Corpus train = generate(toy_config(51));
  Corpus inverted = train;
  inverted.relaxed_labels = true;
  for (Chat& chat : inverted.chats) {
    chat.label = 1 - chat.label;
    for (Turn& turn : chat.turns) turn.risk = 1 - turn.risk;
  }
  const Featurizer featurizer(toy_featurizer());
  SftConfig config = toy_sft();
  config.epochs = 4;

  const PolicyParams init = init_policy(featurizer.config(), config.hidden, 333);
  PolicyParams mirrored = init;
  for (std::uint32_t h = 0; h < mirrored.hidden; ++h) {
    std::swap(mirrored.w2[h * 2], mirrored.w2[h * 2 + 1]);
  }
  std::swap(mirrored.b2[0], mirrored.b2[1]);

  const SftResult straight = sft_train(train, featurizer, config, &init);
  const SftResult flipped = sft_train(inverted, featurizer, config, &mirrored);

  const WindowFeatureCache cache =
      featurize_windows(train, featurizer, config.window);
  for (std::size_t c = 0; c < train.chats.size(); c += 7) {
    for (int t = 1; t <= static_cast<int>(train.chats[c].size()); t += 3) {
      const auto p = action_distribution(straight.params, cache.at(c, t));
      const auto q = action_distribution(flipped.params, cache.at(c, t));
      EXPECT_NEAR(q.p_stop, p.p_continue, 1e-9);
    }
  }
}

TEST(Sft, NegativeSamplingPrefersLongChats) {
  Corpus corpus;
  auto add_chat = [&corpus](const std::string& id, int label, int length) {
    Chat chat;
    chat.id = id;
    chat.label = label;
    for (int i = 0; i < length; ++i) {
      Turn t;
      t.text = "tok" + std::to_string(i % 7);
      t.risk = label == 1 && i > length / 2 ? 1 : 0;
      t.strategy = t.risk ? Strategy::kG : Strategy::kOthers;
      chat.turns.push_back(t);
    }
    corpus.chats.push_back(chat);
  };
  add_chat("p0", 1, 20);
  add_chat("long-a", 0, 120);
  add_chat("short-a", 0, 8);
  add_chat("long-b", 0, 140);
  add_chat("short-b", 0, 9);

  SftConfig config = toy_sft();
  config.epochs = 1;
  config.max_negatives = 2;
  const Featurizer featurizer(toy_featurizer());
  const SftResult result = sft_train(corpus, featurizer, config);
  ASSERT_EQ(result.training_chat_ids.size(), 3u);
  std::size_t long_kept = 0;
  for (const auto& id : result.training_chat_ids) {
    long_kept += (id == "long-a" || id == "long-b") ? 1 : 0;
  }
  EXPECT_EQ(long_kept, 2u);
}

RlConfig toy_rl() {
  RlConfig config;
  config.epochs = 6;
  config.batch_size = 8;
  config.peak_lr = 0.02;
  config.window = 20;
  config.seed = 17;
  return config;
}

TEST(Reinforce, NegativeOnlyCorpusDrivesStopProbabilityDown) {
  GenConfig gen = toy_config(61);
  gen.n_positive = 0;
  gen.n_negative = 12;
  const Corpus train = generate(gen);
  GenConfig held_gen = gen;
  held_gen.seed += 1;
  const Corpus held_out = generate(held_gen);

  const Featurizer featurizer(toy_featurizer());
  // RL always starts from an SFT policy, which leans toward Continue on
  // non-risky text; mirror that operating point with an output bias.
  PolicyParams init = init_policy(featurizer.config(), 8, 444);
  init.b2[0] = 2.5;
  RlConfig config = toy_rl();

  std::vector<double> stop_probs;
  stop_probs.push_back(
      testutil::mean_stop_probability(held_out, init, featurizer, config.window));
  for (std::uint32_t epochs = 1; epochs <= 5; ++epochs) {
    config.epochs = epochs;
    const RlResult result = reinforce_train(train, init, config);
    stop_probs.push_back(testutil::mean_stop_probability(
        held_out, result.params, featurizer, config.window));
  }
  for (std::size_t i = 1; i < stop_probs.size(); ++i) {
    EXPECT_LE(stop_probs[i], stop_probs[i - 1] + 1e-4)
        << "epoch " << i << " raised the stop probability";
  }
  EXPECT_LT(stop_probs.back(), stop_probs.front());
}

TEST(Reinforce, LearnsToStopAtTheOnlyRiskyTurn) {
  Chat chat;
  chat.id = "p0";
  chat.label = 1;
  const std::vector<std::string> words = {"alpha", "bravo", "combo", "delta",
                                          "extra"};
  for (int i = 0; i < 5; ++i) {
    Turn turn;
    turn.text = words[static_cast<std::size_t>(i)];
    turn.risk = i == 2 ? 1 : 0;
    turn.strategy = i == 2 ? Strategy::kG : Strategy::kOthers;
    chat.turns.push_back(turn);
  }
  Corpus corpus;
  corpus.chats.push_back(chat);

  // The enumeration oracle confirms stop-at-3 is the unique optimum.
  const auto sweep =
      oracle::enumerate_policies(chat, oracle::brute_rate(chat, corpus), true);
  ASSERT_EQ(sweep.best_stop_turns, std::vector<int>{3});

  FeaturizerConfig feat_config;
  feat_config.dim = 64;
  const Featurizer featurizer(feat_config);
  const PolicyParams init = init_policy(feat_config, 8, 888);

  RlConfig config;
  config.batch_size = 1;
  config.epochs = 800;
  config.period = 100;
  config.warmup = 10;
  config.peak_lr = 0.05;
  config.window = 10;
  config.seed = 5;
  const RlResult result = reinforce_train(corpus, init, config);

  const DetectionOutcome outcome = run_episode(
      corpus.chats[0], result.params, featurizer, config.window, ActMode::kGreedy);
  ASSERT_TRUE(outcome.stopped.has_value());
  EXPECT_EQ(*outcome.stopped, 3);

  const WindowFeatureCache cache = featurize_windows(corpus, featurizer, 10);
  const auto dist = action_distribution(result.params, cache.at(0, 3));
  EXPECT_GT(dist.p_stop, 0.9);
}

TEST(Reinforce, DeterministicAndHeadOnly) {
  const Corpus train = generate(toy_config(71));
  const Featurizer featurizer(toy_featurizer());
  const PolicyParams init = init_policy(featurizer.config(), 8, 111);
  RlConfig config = toy_rl();
  config.epochs = 2;
  const RlResult a = reinforce_train(train, init, config);
  const RlResult b = reinforce_train(train, init, config);
  EXPECT_EQ(policy_digest(a.params), policy_digest(b.params));
  EXPECT_EQ(a.epoch_mean_returns, b.epoch_mean_returns);
  // The featurizer has no trainable state; its identity must not move.
  EXPECT_EQ(a.params.featurizer.digest(), init.featurizer.digest());
}

TEST(Reinforce, RewardSchemesDiffer) {
  const Corpus train = generate(toy_config(81));
  const Featurizer featurizer(toy_featurizer());
  const PolicyParams init = init_policy(featurizer.config(), 8, 222);
  RlConfig config = toy_rl();
  config.epochs = 2;
  const RlResult speed = reinforce_train(train, init, config);
  config.scheme = RewardScheme::kConstant;
  const RlResult constant = reinforce_train(train, init, config);
  EXPECT_NE(policy_digest(speed.params), policy_digest(constant.params));
}

}  // namespace
}  // namespace espd
