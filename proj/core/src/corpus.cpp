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

#include "espd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "espd/error.hpp"
#include "espd/rng.hpp"
#include "json.hpp"

namespace espd {

namespace {

using nlohmann::json;

bool parse_strategy(const std::string& s, Strategy* out) {
  if (s == "PI") *out = Strategy::kPI;
  else if (s == "G") *out = Strategy::kG;
  else if (s == "A") *out = Strategy::kA;
  else if (s == "Others") *out = Strategy::kOthers;
  else return false;
  return true;
}

bool parse_author(const std::string& s, Author* out) {
  if (s == "initiator") *out = Author::kInitiator;
  else if (s == "respondent") *out = Author::kRespondent;
  else return false;
  return true;
}

std::string trimmed(const std::string& s) {
  const char* ws = " \t\r\n\f\v";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

void reject_unknown_fields(const json& obj,
                           const std::unordered_set<std::string>& allowed,
                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ParseError(where + ": unknown field \"" + it.key() + "\"");
    }
  }
}

int require_binary(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    throw ParseError(where + ": field \"" + std::string(key) +
                     "\" missing or not an integer");
  }
  const int v = obj[key].get<int>();
  if (v != 0 && v != 1) {
    throw ParseError(where + ": field \"" + std::string(key) +
                     "\" must be 0 or 1");
  }
  return v;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw ParseError(where + ": field \"" + std::string(key) +
                     "\" missing or not a string");
  }
  return obj[key].get<std::string>();
}

Chat parse_chat_line(const std::string& line, std::size_t line_no,
                     const std::string& origin) {
  const std::string where = origin + ":" + std::to_string(line_no);
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": malformed JSON (" + std::string(e.what()) + ")");
  }
  if (!obj.is_object()) {
    throw ParseError(where + ": line is not a JSON object");
  }
  reject_unknown_fields(obj, {"id", "label", "turns"}, where);

  Chat chat;
  chat.id = require_string(obj, "id", where);
  chat.label = require_binary(obj, "label", where);
  if (!obj.contains("turns") || !obj["turns"].is_array()) {
    throw ParseError(where + ": field \"turns\" missing or not an array");
  }
  std::size_t turn_idx = 0;
  for (const auto& t : obj["turns"]) {
    const std::string turn_where =
        where + " (chat \"" + chat.id + "\" turn " + std::to_string(turn_idx) + ")";
    if (!t.is_object()) {
      throw ParseError(turn_where + ": turn is not a JSON object");
    }
    reject_unknown_fields(t, {"author", "text", "strategy", "risk"}, turn_where);
    Turn turn;
    if (!parse_author(require_string(t, "author", turn_where), &turn.author)) {
      throw ParseError(turn_where + ": author must be \"initiator\" or \"respondent\"");
    }
    turn.text = require_string(t, "text", turn_where);
    if (!parse_strategy(require_string(t, "strategy", turn_where), &turn.strategy)) {
      throw ParseError(turn_where + ": strategy must be one of PI, G, A, Others");
    }
    turn.risk = require_binary(t, "risk", turn_where);
    chat.turns.push_back(std::move(turn));
    ++turn_idx;
  }
  return chat;
}

double length_mean(const std::vector<double>& lengths) {
  if (lengths.empty()) return 0.0;
  double sum = 0.0;
  for (double v : lengths) sum += v;
  return sum / static_cast<double>(lengths.size());
}

// Population standard deviation, so a single chat reports std 0.
double length_std(const std::vector<double>& lengths, double mean) {
  if (lengths.empty()) return 0.0;
  double sq = 0.0;
  for (double v : lengths) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(lengths.size()));
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kPI: return "PI";
    case Strategy::kG: return "G";
    case Strategy::kA: return "A";
    case Strategy::kOthers: return "Others";
  }
  return "Others";
}

const char* to_string(Author a) {
  return a == Author::kInitiator ? "initiator" : "respondent";
}

int risk_for_strategy(Strategy s) {
  return (s == Strategy::kG || s == Strategy::kA) ? 1 : 0;
}

void validate_chat(const Chat& chat, LabelMode mode) {
  if (chat.turns.empty()) {
    throw ValidationError("chat \"" + chat.id + "\": must contain at least one turn");
  }
  for (std::size_t i = 0; i < chat.turns.size(); ++i) {
    const Turn& turn = chat.turns[i];
    const std::string where =
        "chat \"" + chat.id + "\" turn " + std::to_string(i);
    if (trimmed(turn.text).empty()) {
      throw ValidationError(where + ": text is empty after trimming");
    }
    if (turn.risk != 0 && turn.risk != 1) {
      throw ValidationError(where + ": risk must be 0 or 1");
    }
    if (mode == LabelMode::kStrict &&
        turn.risk != risk_for_strategy(turn.strategy)) {
      throw ValidationError(where + ": risk " + std::to_string(turn.risk) +
                            " inconsistent with strategy " +
                            to_string(turn.strategy));
    }
    if (chat.label == 0 && turn.risk != 0) {
      throw ValidationError(where + ": negative chat contains a risky turn");
    }
  }
}

Corpus parse_corpus(std::istream& in, LabelMode mode, const std::string& origin) {
  Corpus corpus;
  corpus.relaxed_labels = (mode == LabelMode::kRelaxed);
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": empty line");
    }
    Chat chat = parse_chat_line(line, line_no, origin);
    validate_chat(chat, mode);
    if (!seen_ids.insert(chat.id).second) {
      throw ValidationError("duplicate chat id \"" + chat.id + "\" at " +
                            origin + ":" + std::to_string(line_no));
    }
    corpus.chats.push_back(std::move(chat));
  }
  if (corpus.chats.empty()) {
    throw ParseError(origin + ": empty corpus file");
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, LabelMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open corpus file: " + path);
  }
  return parse_corpus(in, mode, path);
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const Chat& chat : corpus.chats) {
    json turns = json::array();
    for (const Turn& t : chat.turns) {
      turns.push_back({{"author", to_string(t.author)},
                       {"risk", t.risk},
                       {"strategy", to_string(t.strategy)},
                       {"text", t.text}});
    }
    json obj = {{"id", chat.id}, {"label", chat.label}, {"turns", turns}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open file for writing: " + path);
  }
  out << corpus_to_jsonl(corpus);
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

Corpus downsample_negatives(const Corpus& corpus, std::uint64_t ratio,
                            std::uint64_t seed) {
  if (ratio == 0) {
    throw ValidationError("downsample ratio must be positive");
  }
  std::vector<std::size_t> negative_idx;
  std::size_t n_positive = 0;
  for (std::size_t i = 0; i < corpus.chats.size(); ++i) {
    if (corpus.chats[i].label == 1) ++n_positive;
    else negative_idx.push_back(i);
  }
  const std::uint64_t want = ratio * n_positive;
  if (negative_idx.size() < want) {
    throw ValidationError("not enough negative chats to downsample: have " +
                          std::to_string(negative_idx.size()) + ", need " +
                          std::to_string(want));
  }

  Rng rng(seed);
  rng.shuffle(negative_idx);
  negative_idx.resize(want);
  std::sort(negative_idx.begin(), negative_idx.end());

  std::vector<bool> keep(corpus.chats.size(), false);
  for (std::size_t i = 0; i < corpus.chats.size(); ++i) {
    if (corpus.chats[i].label == 1) keep[i] = true;
  }
  for (std::size_t i : negative_idx) keep[i] = true;

  Corpus out;
  out.split = corpus.split;
  out.relaxed_labels = corpus.relaxed_labels;
  for (std::size_t i = 0; i < corpus.chats.size(); ++i) {
    if (keep[i]) out.chats.push_back(corpus.chats[i]);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.chats.empty()) {
    throw ValidationError("corpus_stats: empty corpus");
  }
  CorpusStats stats;
  std::vector<double> pos_lengths;
  std::vector<double> neg_lengths;
  for (const Chat& chat : corpus.chats) {
    const auto len = static_cast<double>(chat.turns.size());
    if (chat.label == 1) pos_lengths.push_back(len);
    else neg_lengths.push_back(len);
  }
  stats.n_positive = pos_lengths.size();
  stats.n_negative = neg_lengths.size();
  stats.positive_length_mean = length_mean(pos_lengths);
  stats.positive_length_std = length_std(pos_lengths, stats.positive_length_mean);
  stats.negative_length_mean = length_mean(neg_lengths);
  stats.negative_length_std = length_std(neg_lengths, stats.negative_length_mean);
  stats.median_negative_length = median(neg_lengths);
  return stats;
}

}  // namespace espd
