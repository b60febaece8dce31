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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "espd/error.hpp"
#include "json.hpp"

namespace espd {

namespace {

double safe_ratio(double numerator, double denominator) {
  return denominator > 0.0 ? numerator / denominator : 0.0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

PenaltyRate::PenaltyRate(double p) : value(p) {
  if (!(p > 0.0)) {
    throw ValidationError("penalty rate must be positive, got " +
                          std::to_string(p));
  }
}

double penalty(double latency, PenaltyRate rate) {
  if (!(latency >= 1.0)) {
    throw ValidationError("warning latency must be >= 1, got " +
                          std::to_string(latency));
  }
  // -1 + 2 / (1 + exp(-p (l - 1))) == tanh(p (l - 1) / 2), which does not
  // lose the small complement for large arguments. Saturate to the largest
  // double below 1 so the codomain stays [0, 1) and speed stays positive.
  const double value = std::tanh(0.5 * rate.value * (latency - 1.0));
  return value < 1.0 ? value : 0x1.fffffffffffffp-1;
}

double episode_speed(double latency, PenaltyRate rate) {
  return 1.0 - penalty(latency, rate);
}

PenaltyRate calibrate_p(double reference_latency) {
  if (!(reference_latency >= 2.0)) {
    throw ValidationError(
        "reference latency must be >= 2 to calibrate a penalty rate, got " +
        std::to_string(reference_latency));
  }
  return PenaltyRate(std::log(3.0) / (reference_latency - 1.0));
}

double reference_latency_for_chat(const Chat& chat, const Corpus& corpus) {
  if (chat.label == 0) {
    std::vector<double> neg_lengths;
    for (const Chat& c : corpus.chats) {
      if (c.label == 0) neg_lengths.push_back(static_cast<double>(c.size()));
    }
    if (neg_lengths.empty()) {
      throw ValidationError("corpus has no negative chats to take a median of");
    }
    return median(std::move(neg_lengths));
  }
  int accumulated = 0;
  int last_risky = 0;
  for (std::size_t i = 0; i < chat.turns.size(); ++i) {
    if (chat.turns[i].risk == 1) {
      ++accumulated;
      last_risky = static_cast<int>(i) + 1;
      if (accumulated == kRiskAccumulationTarget) return last_risky;
    }
  }
  if (last_risky == 0) {
    throw ValidationError("positive chat \"" + chat.id +
                          "\" has no risky turn; reference latency undefined");
  }
  return last_risky;
}

PenaltyRate chat_penalty_rate(const Chat& chat, double median_negative_length) {
  double l_ref;
  if (chat.label == 0) {
    l_ref = median_negative_length;
  } else {
    int accumulated = 0;
    int last_risky = 0;
    for (std::size_t i = 0; i < chat.turns.size(); ++i) {
      if (chat.turns[i].risk == 1) {
        ++accumulated;
        last_risky = static_cast<int>(i) + 1;
        if (accumulated == kRiskAccumulationTarget) break;
      }
    }
    l_ref = last_risky > 0 ? static_cast<double>(last_risky)
                           : static_cast<double>(chat.size());
  }
  return calibrate_p(std::max(2.0, l_ref));
}

double corpus_speed(const std::vector<SuccessfulDetection>& detections) {
  if (detections.empty()) return 0.0;
  std::vector<double> penalties;
  penalties.reserve(detections.size());
  for (const SuccessfulDetection& d : detections) {
    penalties.push_back(penalty(d.latency, d.rate));
  }
  return 1.0 - median(std::move(penalties));
}

const char* to_string(EvalMode mode) {
  return mode == EvalMode::kTurnLevel ? "turn_level" : "chat_level";
}

EvalReport evaluate(const std::vector<DetectionOutcome>& outcomes,
                    const Corpus& corpus, EvalMode mode,
                    const EvalOptions& options) {
  if (outcomes.size() != corpus.chats.size()) {
    throw ValidationError("evaluate: " + std::to_string(outcomes.size()) +
                          " outcomes for " +
                          std::to_string(corpus.chats.size()) + " chats");
  }
  std::unordered_map<std::string, const Chat*> by_id;
  for (const Chat& chat : corpus.chats) by_id[chat.id] = &chat;

  std::vector<double> neg_lengths;
  for (const Chat& chat : corpus.chats) {
    if (chat.label == 0) neg_lengths.push_back(static_cast<double>(chat.size()));
  }
  const double median_neg = median(std::move(neg_lengths));

  EvalReport report;
  report.mode = mode;
  std::vector<SuccessfulDetection> successes;

  for (const DetectionOutcome& outcome : outcomes) {
    const auto it = by_id.find(outcome.chat_id);
    if (it == by_id.end()) {
      throw ValidationError("evaluate: outcome for unknown chat \"" +
                            outcome.chat_id + "\"");
    }
    const Chat& chat = *it->second;
    if (outcome.stopped.has_value() != outcome.stop_risk.has_value()) {
      throw ValidationError("evaluate: outcome for chat \"" + outcome.chat_id +
                            "\" has stop_risk without stop turn (or vice versa)");
    }
    if (outcome.stopped &&
        (*outcome.stopped < 1 ||
         *outcome.stopped > static_cast<int>(chat.size()))) {
      throw ValidationError("evaluate: stop turn out of range for chat \"" +
                            outcome.chat_id + "\"");
    }
    if (outcome.chat_label != chat.label) {
      throw ValidationError("evaluate: outcome label mismatch for chat \"" +
                            outcome.chat_id + "\"");
    }

    const bool stopped = outcome.stopped.has_value();
    bool success = false;
    if (chat.label == 1) {
      const bool on_risky = stopped && *outcome.stop_risk == 1;
      const bool hit = (mode == EvalMode::kTurnLevel) ? on_risky : stopped;
      if (hit) {
        ++report.tp;
        success = true;
        const PenaltyRate rate =
            options.per_chat_rate ? chat_penalty_rate(chat, median_neg)
                                  : PenaltyRate(options.global_rate);
        successes.push_back({static_cast<double>(*outcome.stopped), rate});
      } else {
        ++report.fn;
      }
      if (mode == EvalMode::kTurnLevel && stopped && !on_risky) {
        ++report.fp;  // wrong-turn stop: counted as FP and FN
      }
    } else {
      if (stopped) {
        ++report.fp;
        ++report.fp_negative;
      } else {
        ++report.tn;
        success = true;  // negative chat correctly read to the end
      }
    }

    ChatOutcomeRecord record;
    record.outcome = outcome;
    record.success = success;
    if (stopped) {
      const PenaltyRate rate = options.per_chat_rate
                                   ? chat_penalty_rate(chat, median_neg)
                                   : PenaltyRate(options.global_rate);
      record.stop_penalty = penalty(static_cast<double>(*outcome.stopped), rate);
    }
    report.per_chat.push_back(std::move(record));
  }

  report.precision = safe_ratio(static_cast<double>(report.tp),
                                static_cast<double>(report.tp + report.fp));
  report.recall = safe_ratio(static_cast<double>(report.tp),
                             static_cast<double>(report.tp + report.fn));
  report.f1 = (report.precision + report.recall) > 0.0
                  ? 2.0 * report.precision * report.recall /
                        (report.precision + report.recall)
                  : 0.0;
  report.fpr =
      safe_ratio(static_cast<double>(report.fp_negative),
                 static_cast<double>(report.fp_negative + report.tn));
  report.speed = corpus_speed(successes);
  report.latency_f1 = report.f1 * report.speed;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json obj = {
      {"mode", to_string(report.mode)},
      {"precision", report.precision},
      {"recall", report.recall},
      {"f1", report.f1},
      {"speed", report.speed},
      {"latency_f1", report.latency_f1},
      {"fpr", report.fpr},
      {"tp", report.tp},
      {"fp", report.fp},
      {"fn", report.fn},
      {"tn", report.tn},
      {"n_chats", report.per_chat.size()},
  };
  return obj.dump(2) + "\n";
}

void write_report_json(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << report_to_json(report);
  if (!out) throw IoError("write failed: " + path);
}

std::string outcomes_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "chat_id,label,stop_turn,stop_risk,penalty,success\n";
  for (const ChatOutcomeRecord& record : report.per_chat) {
    const DetectionOutcome& o = record.outcome;
    out << o.chat_id << ',' << o.chat_label << ',';
    if (o.stopped) out << *o.stopped;
    out << ',';
    if (o.stop_risk) out << *o.stop_risk;
    out << ',';
    if (record.stop_penalty) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.12g", *record.stop_penalty);
      out << buf;
    }
    out << ',' << (record.success ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_outcomes_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << outcomes_to_csv(report);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<DetectionOutcome> read_outcomes_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open outcomes CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty outcomes CSV");
  if (line.rfind("chat_id,", 0) != 0) {
    throw ParseError(path + ": missing outcomes CSV header");
  }
  std::vector<DetectionOutcome> outcomes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 6 CSV fields");
    }
    DetectionOutcome o;
    o.chat_id = fields[0];
    o.chat_label = std::stoi(fields[1]);
    if (!fields[2].empty()) o.stopped = std::stoi(fields[2]);
    if (!fields[3].empty()) o.stop_risk = std::stoi(fields[3]);
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

}  // namespace espd
