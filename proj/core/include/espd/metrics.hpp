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

#ifndef ESPD_METRICS_HPP_
#define ESPD_METRICS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "espd/corpus.hpp"

namespace espd {

// Per-chat penalty growth rate. Strictly positive.
struct PenaltyRate {
  explicit PenaltyRate(double p);
  double value;
};

// Latency penalty in [0, 1): 0 at l = 1, strictly increasing in l, with
// supremum 1. Throws ValidationError for l < 1.
double penalty(double latency, PenaltyRate rate);

// Detection speed: 1 - penalty(l, p), in (0, 1].
double episode_speed(double latency, PenaltyRate rate);

// The unique p with penalty(l_ref, p) = 0.5, i.e. ln(3) / (l_ref - 1).
// Throws ValidationError for l_ref < 2 (penalty(1) = 0 for every p).
PenaltyRate calibrate_p(double reference_latency);

// Number of accumulated risky turns that defines a positive chat's
// reference latency.
inline constexpr int kRiskAccumulationTarget = 20;

// Reference latency used to calibrate a chat's penalty rate.
//  - positive chat: the 1-based turn index at which the cumulative count of
//    risky turns reaches kRiskAccumulationTarget; if the chat has fewer
//    risky turns, the index of the last risky turn. Throws ValidationError
//    when the chat has no risky turn at all.
//  - negative chat: the median length over all negative chats in `corpus`.
double reference_latency_for_chat(const Chat& chat, const Corpus& corpus);

// Same positive-chat rule with a precomputed negative-length median, plus a
// clamp to l_ref >= 2 so a penalty rate always exists. Positive chats
// without any risky turn fall back to their own length (detect before the
// chat ends).
PenaltyRate chat_penalty_rate(const Chat& chat, double median_negative_length);

// One detection decision for one chat. `stopped` is the 1-based turn index
// of the stop action; absent when the detector read the chat to the end.
struct DetectionOutcome {
  std::string chat_id;
  std::optional<int> stopped;
  std::optional<int> stop_risk;  // risk label of the stopped turn
  int chat_label = 0;
};

// A correctly detected positive chat together with its penalty rate.
struct SuccessfulDetection {
  double latency;
  PenaltyRate rate;
};

// Corpus-level speed: 1 - median{penalty(l_i, p_i)} over successful
// detections of grooming chats. Returns 0 for an empty set.
double corpus_speed(const std::vector<SuccessfulDetection>& detections);

enum class EvalMode { kTurnLevel, kChatLevel };

const char* to_string(EvalMode mode);

struct EvalOptions {
  // Per-chat penalty rates (default). When false, `global_rate` is used for
  // every chat instead.
  bool per_chat_rate = true;
  double global_rate = 0.1;
};

// Report row retained per chat: the outcome plus derived reporting fields.
struct ChatOutcomeRecord {
  DetectionOutcome outcome;
  std::optional<double> stop_penalty;  // penalty(l, p_chat) when stopped
  bool success = false;                // mode-dependent success flag
};

struct EvalReport {
  EvalMode mode = EvalMode::kTurnLevel;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double speed = 0.0;
  double latency_f1 = 0.0;
  double fpr = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t fp_negative = 0;  // false positives among negative chats only
  std::vector<ChatOutcomeRecord> per_chat;
};

// Scores one outcome per chat against the corpus.
//
// TurnLevel counting: a stop on a risky turn of a positive chat is a TP;
// any stop in a negative chat, or a stop on a non-risky turn of a positive
// chat, is an FP; a positive chat not detected on a risky turn is an FN
// (so a wrong-turn stop in a positive chat counts as both FP and FN); a
// negative chat read to the end is a TN. ChatLevel counting ignores which
// turn was stopped on. FPR is computed over negative chats only. Speed is
// corpus_speed over the mode's successful positive detections.
//
// Throws ValidationError when outcomes and corpus chats do not match 1:1.
EvalReport evaluate(const std::vector<DetectionOutcome>& outcomes,
                    const Corpus& corpus, EvalMode mode,
                    const EvalOptions& options = {});

// Flat JSON object with the scalar report fields.
std::string report_to_json(const EvalReport& report);
void write_report_json(const EvalReport& report, const std::string& path);

// Per-chat CSV: chat_id,label,stop_turn,stop_risk,penalty,success.
std::string outcomes_to_csv(const EvalReport& report);
void write_outcomes_csv(const EvalReport& report, const std::string& path);

// Reads back a per-chat CSV written by write_outcomes_csv.
std::vector<DetectionOutcome> read_outcomes_csv(const std::string& path);

}  // namespace espd

#endif  // ESPD_METRICS_HPP_
