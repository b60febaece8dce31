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

#include "espd/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "espd/error.hpp"
#include "espd/rng.hpp"
#include "oracles.hpp"

namespace espd {
namespace {

TEST(Penalty, ZeroAtLatencyOne) {
  Rng rng(123);
  for (int i = 0; i < 100; ++i) {
    const double p = 1e-4 + rng.uniform() * 5.0;
    EXPECT_DOUBLE_EQ(penalty(1.0, PenaltyRate(p)), 0.0);
  }
}

TEST(Penalty, HalfAtLatencyTwoWithLogThree) {
  EXPECT_NEAR(penalty(2.0, PenaltyRate(std::log(3.0))), 0.5, 1e-12);
}

TEST(Penalty, ApproachesOneForLargeLatency) {
  const double v = penalty(1000.0, PenaltyRate(0.1));
  EXPECT_GT(v, 1.0 - 1e-8);
  EXPECT_LT(v, 1.0);
}

TEST(Penalty, StrictlyIncreasingInLatencyAndRate) {
  const PenaltyRate rate(0.05);
  double previous = -1.0;
  for (int l = 1; l <= 200; ++l) {
    const double v = penalty(l, rate);
    EXPECT_GT(v, previous);
    previous = v;
  }
  double previous_p = penalty(10.0, PenaltyRate(0.01));
  for (double p : {0.02, 0.05, 0.1, 0.5, 1.0, 2.0}) {
    const double v = penalty(10.0, PenaltyRate(p));
    EXPECT_GT(v, previous_p);
    previous_p = v;
  }
}

TEST(Penalty, DomainErrors) {
  EXPECT_THROW(penalty(0.5, PenaltyRate(0.1)), ValidationError);
  EXPECT_THROW(PenaltyRate(0.0), ValidationError);
  EXPECT_THROW(PenaltyRate(-1.0), ValidationError);
}

TEST(CalibrateP, ClosedForm) {
  EXPECT_NEAR(calibrate_p(36.0).value, std::log(3.0) / 35.0, 1e-15);
  EXPECT_NEAR(calibrate_p(36.0).value, 0.0313889, 1e-6);
  EXPECT_DOUBLE_EQ(calibrate_p(2.0).value, std::log(3.0));
  EXPECT_THROW(calibrate_p(1.0), ValidationError);
}

TEST(CalibrateP, RoundTripHitsOneHalf) {
  for (int l_ref : {2, 3, 5, 10, 36, 100, 1000, 10000}) {
    const PenaltyRate rate = calibrate_p(l_ref);
    EXPECT_NEAR(penalty(l_ref, rate), 0.5, 1e-9) << "l_ref=" << l_ref;
  }
}

TEST(EpisodeSpeed, Basics) {
  EXPECT_DOUBLE_EQ(episode_speed(1.0, PenaltyRate(3.0)), 1.0);
  EXPECT_NEAR(episode_speed(2.0, PenaltyRate(std::log(3.0))), 0.5, 1e-12);
  EXPECT_NEAR(episode_speed(36.0, calibrate_p(36.0)), 0.5, 1e-9);
}

TEST(EpisodeSpeed, SumsWithPenaltyToExactlyOne) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double l = 1.0 + rng.bounded(5000);
    const PenaltyRate rate(1e-4 + rng.uniform() * 3.0);
    EXPECT_EQ(episode_speed(l, rate) + penalty(l, rate), 1.0);
  }
}

Chat chat_with_risk_pattern(const std::string& id, int label,
                            const std::vector<int>& risks) {
  Chat chat;
  chat.id = id;
  chat.label = label;
  for (int r : risks) {
    Turn turn;
    turn.text = "x";
    turn.risk = r;
    turn.strategy = r == 1 ? Strategy::kG : Strategy::kOthers;
    chat.turns.push_back(turn);
  }
  return chat;
}

Chat negative_chat(const std::string& id, int length) {
  return chat_with_risk_pattern(id, 0, std::vector<int>(length, 0));
}

TEST(ReferenceLatency, TwentiethRiskyTurn) {
  // 19 risky turns early, the 20th at turn 57.
  std::vector<int> risks(60, 0);
  for (int i = 0; i < 19; ++i) risks[static_cast<std::size_t>(i)] = 1;
  risks[56] = 1;
  Corpus corpus;
  corpus.chats.push_back(chat_with_risk_pattern("p", 1, risks));
  EXPECT_DOUBLE_EQ(reference_latency_for_chat(corpus.chats[0], corpus), 57.0);
}

TEST(ReferenceLatency, FallbackToLastRiskyTurn) {
  std::vector<int> risks(15, 0);
  risks[2] = risks[4] = risks[6] = risks[9] = risks[11] = 1;
  Corpus corpus;
  corpus.chats.push_back(chat_with_risk_pattern("p", 1, risks));
  EXPECT_DOUBLE_EQ(reference_latency_for_chat(corpus.chats[0], corpus), 12.0);
}

TEST(ReferenceLatency, NegativeChatUsesMedianNegativeLength) {
  Corpus corpus;
  corpus.chats.push_back(negative_chat("n1", 10));
  corpus.chats.push_back(negative_chat("n2", 36));
  corpus.chats.push_back(negative_chat("n3", 50));
  EXPECT_DOUBLE_EQ(reference_latency_for_chat(corpus.chats[0], corpus), 36.0);
}

TEST(ReferenceLatency, PositiveWithoutRiskyTurnRejected) {
  Corpus corpus;
  corpus.chats.push_back(chat_with_risk_pattern("p", 1, {0, 0, 0}));
  EXPECT_THROW(reference_latency_for_chat(corpus.chats[0], corpus),
               ValidationError);
}

TEST(CorpusSpeed, AllImmediateDetections) {
  std::vector<SuccessfulDetection> detections;
  for (int i = 0; i < 5; ++i) detections.push_back({1.0, PenaltyRate(0.3)});
  EXPECT_DOUBLE_EQ(corpus_speed(detections), 1.0);
}

TEST(CorpusSpeed, SingleDetectionReconstructsReportedSpeed) {
  // One successful detection with penalty 0.431 gives speed 0.569; the rate
  // is chosen so the logistic penalty at latency 2 is exactly 0.431.
  const double rate = std::log(1.431 / 0.569);
  const std::vector<SuccessfulDetection> detections = {{2.0, PenaltyRate(rate)}};
  EXPECT_NEAR(corpus_speed(detections), 0.569, 1e-12);
}

TEST(CorpusSpeed, EmptySetIsZero) {
  EXPECT_DOUBLE_EQ(corpus_speed({}), 0.0);
}

DetectionOutcome outcome_for(const Chat& chat, std::optional<int> stop) {
  DetectionOutcome o;
  o.chat_id = chat.id;
  o.chat_label = chat.label;
  if (stop) {
    o.stopped = *stop;
    o.stop_risk = chat.turns[static_cast<std::size_t>(*stop - 1)].risk;
  }
  return o;
}

TEST(Evaluate, NeverStopOnAllNegativeCorpus) {
  Corpus corpus;
  for (int i = 0; i < 4; ++i) {
    corpus.chats.push_back(negative_chat("n" + std::to_string(i), 5 + i));
  }
  std::vector<DetectionOutcome> outcomes;
  for (const Chat& chat : corpus.chats) {
    outcomes.push_back(outcome_for(chat, std::nullopt));
  }
  const EvalReport report = evaluate(outcomes, corpus, EvalMode::kTurnLevel);
  EXPECT_DOUBLE_EQ(report.precision, 0.0);
  EXPECT_DOUBLE_EQ(report.recall, 0.0);
  EXPECT_DOUBLE_EQ(report.f1, 0.0);
  EXPECT_DOUBLE_EQ(report.fpr, 0.0);
  EXPECT_DOUBLE_EQ(report.latency_f1, 0.0);
  EXPECT_EQ(report.tn, 4u);
}

TEST(Evaluate, WrongTurnStopCountsAsBothFpAndFn) {
  Corpus corpus;
  corpus.chats.push_back(chat_with_risk_pattern("p", 1, {0, 1, 0}));
  std::vector<DetectionOutcome> outcomes = {outcome_for(corpus.chats[0], 3)};
  const EvalReport turn = evaluate(outcomes, corpus, EvalMode::kTurnLevel);
  EXPECT_EQ(turn.tp, 0u);
  EXPECT_EQ(turn.fp, 1u);
  EXPECT_EQ(turn.fn, 1u);
  EXPECT_DOUBLE_EQ(turn.fpr, 0.0);  // no negative chats involved
  const EvalReport chat = evaluate(outcomes, corpus, EvalMode::kChatLevel);
  EXPECT_EQ(chat.tp, 1u);
  EXPECT_GE(chat.tp, turn.tp);
}

TEST(Evaluate, MismatchedOutcomesRejected) {
  Corpus corpus;
  corpus.chats.push_back(negative_chat("n", 3));
  std::vector<DetectionOutcome> outcomes;
  DetectionOutcome bogus;
  bogus.chat_id = "other";
  outcomes.push_back(bogus);
  EXPECT_THROW(evaluate(outcomes, corpus, EvalMode::kTurnLevel),
               ValidationError);
}

// Randomized equivalence against the brute-force oracle (the full-size
// sweep runs in the acceptance suite).
TEST(Evaluate, MatchesBruteForceOracleOnRandomCorpora) {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    Corpus corpus;
    const int n_chats = 2 + static_cast<int>(rng.bounded(12));
    std::vector<DetectionOutcome> outcomes;
    for (int c = 0; c < n_chats; ++c) {
      const bool positive = rng.bernoulli(0.4);
      const int length = 1 + static_cast<int>(rng.bounded(40));
      std::vector<int> risks(static_cast<std::size_t>(length), 0);
      if (positive) {
        bool any = false;
        for (int t = 0; t < length; ++t) {
          if (rng.bernoulli(0.3)) {
            risks[static_cast<std::size_t>(t)] = 1;
            any = true;
          }
        }
        if (!any) risks[static_cast<std::size_t>(length - 1)] = 1;
      }
      corpus.chats.push_back(chat_with_risk_pattern(
          "c" + std::to_string(c), positive ? 1 : 0, risks));
      const Chat& chat = corpus.chats.back();
      std::optional<int> stop;
      if (rng.bernoulli(0.6)) {
        stop = 1 + static_cast<int>(rng.bounded(chat.size()));
      }
      outcomes.push_back(outcome_for(chat, stop));
    }
    for (EvalMode mode : {EvalMode::kTurnLevel, EvalMode::kChatLevel}) {
      const EvalReport report = evaluate(outcomes, corpus, mode);
      const oracle::BruteReport expected =
          oracle::brute_force_evaluate(outcomes, corpus, mode);
      EXPECT_EQ(report.tp, expected.tp);
      EXPECT_EQ(report.fp, expected.fp);
      EXPECT_EQ(report.fn, expected.fn);
      EXPECT_EQ(report.tn, expected.tn);
      EXPECT_DOUBLE_EQ(report.precision, expected.precision);
      EXPECT_DOUBLE_EQ(report.recall, expected.recall);
      EXPECT_DOUBLE_EQ(report.f1, expected.f1);
      EXPECT_DOUBLE_EQ(report.speed, expected.speed);
      EXPECT_DOUBLE_EQ(report.latency_f1, expected.latency_f1);
      EXPECT_DOUBLE_EQ(report.fpr, expected.fpr);
    }
  }
}

TEST(Evaluate, LatencyF1IsProductOfF1AndSpeed) {
  Corpus corpus;
  corpus.chats.push_back(chat_with_risk_pattern("p", 1, {0, 1, 1, 0}));
  corpus.chats.push_back(negative_chat("n", 6));
  const std::vector<DetectionOutcome> outcomes = {
      outcome_for(corpus.chats[0], 2), outcome_for(corpus.chats[1], std::nullopt)};
  const EvalReport report = evaluate(outcomes, corpus, EvalMode::kTurnLevel);
  EXPECT_DOUBLE_EQ(report.latency_f1, report.f1 * report.speed);
  EXPECT_LE(report.latency_f1, report.f1);
}

TEST(ReportIo, CsvRoundTrip) {
  Corpus corpus;
  corpus.chats.push_back(chat_with_risk_pattern("p", 1, {0, 1}));
  corpus.chats.push_back(negative_chat("n", 4));
  const std::vector<DetectionOutcome> outcomes = {
      outcome_for(corpus.chats[0], 2), outcome_for(corpus.chats[1], std::nullopt)};
  const EvalReport report = evaluate(outcomes, corpus, EvalMode::kTurnLevel);

  const auto path = std::filesystem::temp_directory_path() / "espd_outcomes.csv";
  write_outcomes_csv(report, path.string());
  const auto loaded = read_outcomes_csv(path.string());
  ASSERT_EQ(loaded.size(), outcomes.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].chat_id, outcomes[i].chat_id);
    EXPECT_EQ(loaded[i].chat_label, outcomes[i].chat_label);
    EXPECT_EQ(loaded[i].stopped, outcomes[i].stopped);
    EXPECT_EQ(loaded[i].stop_risk, outcomes[i].stop_risk);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace espd
