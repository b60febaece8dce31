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

#include "run_config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "espd/error.hpp"
#include "espd/rng.hpp"

namespace espd::cli {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key " + key + ": expected a number, got \"" +
                     value + "\"");
  }
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key " + key +
                     ": expected a non-negative integer, got \"" + value + "\"");
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ParseError("config key " + key + ": expected a boolean, got \"" +
                   value + "\"");
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
  std::vector<int> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_u64(item, key)));
  }
  if (out.empty()) {
    throw ParseError("config key " + key + ": expected a list of integers");
  }
  return out;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);

  RunConfig config;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"synth.n_positive",
       [&](const std::string& v, const std::string& k) {
         config.gen.n_positive = parse_u64(v, k);
       }},
      {"synth.n_negative",
       [&](const std::string& v, const std::string& k) {
         config.gen.n_negative = parse_u64(v, k);
       }},
      {"synth.hard_negative_fraction",
       [&](const std::string& v, const std::string& k) {
         config.gen.hard_negative_fraction = parse_double(v, k);
       }},
      {"synth.positive_length_mean",
       [&](const std::string& v, const std::string& k) {
         config.gen.positive_length_mean = parse_double(v, k);
       }},
      {"synth.positive_length_std",
       [&](const std::string& v, const std::string& k) {
         config.gen.positive_length_std = parse_double(v, k);
       }},
      {"synth.negative_length_mean",
       [&](const std::string& v, const std::string& k) {
         config.gen.negative_length_mean = parse_double(v, k);
       }},
      {"synth.negative_length_std",
       [&](const std::string& v, const std::string& k) {
         config.gen.negative_length_std = parse_double(v, k);
       }},
      {"synth.pi_fraction",
       [&](const std::string& v, const std::string& k) {
         config.gen.pi_fraction = parse_double(v, k);
       }},
      {"synth.g_fraction",
       [&](const std::string& v, const std::string& k) {
         config.gen.g_fraction = parse_double(v, k);
       }},
      {"synth.a_fraction",
       [&](const std::string& v, const std::string& k) {
         config.gen.a_fraction = parse_double(v, k);
       }},
      {"synth.seed",
       [&](const std::string& v, const std::string& k) {
         config.gen.seed = parse_u64(v, k);
       }},
      {"featurizer.ngram_orders",
       [&](const std::string& v, const std::string& k) {
         config.featurizer.ngram_orders = parse_int_list(v, k);
       }},
      {"featurizer.dim",
       [&](const std::string& v, const std::string& k) {
         config.featurizer.dim = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"featurizer.hash_seed",
       [&](const std::string& v, const std::string& k) {
         config.featurizer.hash_seed = parse_u64(v, k);
       }},
      {"featurizer.lowercase",
       [&](const std::string& v, const std::string& k) {
         config.featurizer.lowercase = parse_bool(v, k);
       }},
      {"sft.learning_rate",
       [&](const std::string& v, const std::string& k) {
         config.sft.learning_rate = parse_double(v, k);
       }},
      {"sft.batch_size",
       [&](const std::string& v, const std::string& k) {
         config.sft.batch_size = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"sft.epochs",
       [&](const std::string& v, const std::string& k) {
         config.sft.epochs = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"sft.class_weight",
       [&](const std::string& v, const std::string& k) {
         config.sft.class_weight = parse_double(v, k);
       }},
      {"sft.max_negatives",
       [&](const std::string& v, const std::string& k) {
         config.sft.max_negatives = parse_u64(v, k);
       }},
      {"sft.hidden",
       [&](const std::string& v, const std::string& k) {
         config.sft.hidden = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"sft.window",
       [&](const std::string& v, const std::string& k) {
         config.sft.window = static_cast<int>(parse_u64(v, k));
       }},
      {"sft.seed",
       [&](const std::string& v, const std::string& k) {
         config.sft.seed = parse_u64(v, k);
       }},
      {"rl.learning_rate",
       [&](const std::string& v, const std::string& k) {
         config.rl.learning_rate = parse_double(v, k);
       }},
      {"rl.epochs",
       [&](const std::string& v, const std::string& k) {
         config.rl.epochs = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"rl.batch_size",
       [&](const std::string& v, const std::string& k) {
         config.rl.batch_size = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"rl.discount",
       [&](const std::string& v, const std::string& k) {
         config.rl.discount = parse_double(v, k);
       }},
      {"rl.period",
       [&](const std::string& v, const std::string& k) {
         config.rl.period = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"rl.period_mult",
       [&](const std::string& v, const std::string& k) {
         config.rl.period_mult = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"rl.peak_lr",
       [&](const std::string& v, const std::string& k) {
         config.rl.peak_lr = parse_double(v, k);
       }},
      {"rl.warmup",
       [&](const std::string& v, const std::string& k) {
         config.rl.warmup = static_cast<std::uint32_t>(parse_u64(v, k));
       }},
      {"rl.peak_decay",
       [&](const std::string& v, const std::string& k) {
         config.rl.peak_decay = parse_double(v, k);
       }},
      {"rl.scheme",
       [&](const std::string& v, const std::string& k) {
         if (v == "speed_control") config.rl.scheme = RewardScheme::kSpeedControl;
         else if (v == "constant") config.rl.scheme = RewardScheme::kConstant;
         else throw ParseError("config key " + k +
                               ": expected speed_control or constant");
       }},
      {"rl.literal_update_sign",
       [&](const std::string& v, const std::string& k) {
         config.rl.literal_update_sign = parse_bool(v, k);
       }},
      {"rl.window",
       [&](const std::string& v, const std::string& k) {
         config.rl.window = static_cast<int>(parse_u64(v, k));
       }},
      {"rl.seed",
       [&](const std::string& v, const std::string& k) {
         config.rl.seed = parse_u64(v, k);
       }},
      {"baseline.window_size",
       [&](const std::string& v, const std::string& k) {
         config.two_tier.window_size = static_cast<int>(parse_u64(v, k));
       }},
      {"baseline.span",
       [&](const std::string& v, const std::string& k) {
         config.two_tier.span = static_cast<int>(parse_u64(v, k));
       }},
      {"baseline.skepticism",
       [&](const std::string& v, const std::string& k) {
         config.two_tier.skepticism = static_cast<int>(parse_u64(v, k));
       }},
      {"eval.mode",
       [&](const std::string& v, const std::string& k) {
         if (v == "turn") config.eval_mode = EvalMode::kTurnLevel;
         else if (v == "chat") config.eval_mode = EvalMode::kChatLevel;
         else throw ParseError("config key " + k + ": expected turn or chat");
       }},
      {"eval.act",
       [&](const std::string& v, const std::string& k) {
         if (v == "greedy") config.eval_act = ActMode::kGreedy;
         else if (v == "sample") config.eval_act = ActMode::kSample;
         else throw ParseError("config key " + k + ": expected greedy or sample");
       }},
      {"eval.per_chat_rate",
       [&](const std::string& v, const std::string& k) {
         config.eval_options.per_chat_rate = parse_bool(v, k);
       }},
      {"eval.global_rate",
       [&](const std::string& v, const std::string& k) {
         config.eval_options.global_rate = parse_double(v, k);
       }},
      {"eval.seed",
       [&](const std::string& v, const std::string& k) {
         config.eval_seed = parse_u64(v, k);
       }},
  };

  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected key = value");
    }
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": unknown config key \"" + key + "\"");
    }
    it->second(value, key);
  }
  return config;
}

std::map<std::string, std::string> config_items(const RunConfig& config) {
  std::map<std::string, std::string> items;
  auto put_num = [&items](const std::string& key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    items[key] = buf;
  };
  auto put_u64 = [&items](const std::string& key, std::uint64_t v) {
    items[key] = std::to_string(v);
  };
  put_u64("synth.n_positive", config.gen.n_positive);
  put_u64("synth.n_negative", config.gen.n_negative);
  put_num("synth.hard_negative_fraction", config.gen.hard_negative_fraction);
  put_num("synth.positive_length_mean", config.gen.positive_length_mean);
  put_num("synth.positive_length_std", config.gen.positive_length_std);
  put_num("synth.negative_length_mean", config.gen.negative_length_mean);
  put_num("synth.negative_length_std", config.gen.negative_length_std);
  put_num("synth.pi_fraction", config.gen.pi_fraction);
  put_num("synth.g_fraction", config.gen.g_fraction);
  put_num("synth.a_fraction", config.gen.a_fraction);
  put_u64("synth.seed", config.gen.seed);
  {
    std::string orders;
    for (int o : config.featurizer.ngram_orders) {
      if (!orders.empty()) orders += ',';
      orders += std::to_string(o);
    }
    items["featurizer.ngram_orders"] = orders;
  }
  put_u64("featurizer.dim", config.featurizer.dim);
  put_u64("featurizer.hash_seed", config.featurizer.hash_seed);
  items["featurizer.lowercase"] = config.featurizer.lowercase ? "true" : "false";
  put_num("sft.learning_rate", config.sft.learning_rate);
  put_u64("sft.batch_size", config.sft.batch_size);
  put_u64("sft.epochs", config.sft.epochs);
  put_num("sft.class_weight", config.sft.class_weight);
  put_u64("sft.max_negatives", config.sft.max_negatives);
  put_u64("sft.hidden", config.sft.hidden);
  put_u64("sft.window", static_cast<std::uint64_t>(config.sft.window));
  put_u64("sft.seed", config.sft.seed);
  put_num("rl.learning_rate", config.rl.learning_rate);
  put_u64("rl.epochs", config.rl.epochs);
  put_u64("rl.batch_size", config.rl.batch_size);
  put_num("rl.discount", config.rl.discount);
  put_u64("rl.period", config.rl.period);
  put_u64("rl.period_mult", config.rl.period_mult);
  put_num("rl.peak_lr", config.rl.peak_lr);
  put_u64("rl.warmup", config.rl.warmup);
  put_num("rl.peak_decay", config.rl.peak_decay);
  items["rl.scheme"] = config.rl.scheme == RewardScheme::kSpeedControl
                           ? "speed_control"
                           : "constant";
  items["rl.literal_update_sign"] =
      config.rl.literal_update_sign ? "true" : "false";
  put_u64("rl.window", static_cast<std::uint64_t>(config.rl.window));
  put_u64("rl.seed", config.rl.seed);
  put_u64("baseline.window_size",
          static_cast<std::uint64_t>(config.two_tier.window_size));
  put_u64("baseline.span", static_cast<std::uint64_t>(config.two_tier.span));
  put_u64("baseline.skepticism",
          static_cast<std::uint64_t>(config.two_tier.skepticism));
  items["eval.mode"] = config.eval_mode == EvalMode::kTurnLevel ? "turn" : "chat";
  items["eval.act"] = config.eval_act == ActMode::kGreedy ? "greedy" : "sample";
  items["eval.per_chat_rate"] =
      config.eval_options.per_chat_rate ? "true" : "false";
  put_num("eval.global_rate", config.eval_options.global_rate);
  put_u64("eval.seed", config.eval_seed);
  return items;
}

std::string config_digest(const RunConfig& config) {
  std::string blob;
  for (const auto& [key, value] : config_items(config)) {
    blob += key;
    blob += '=';
    blob += value;
    blob += '\n';
  }
  const std::uint64_t h = fnv1a64(blob.data(), blob.size());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace espd::cli
