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

#include "espd/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "espd/error.hpp"

namespace espd {

namespace {

// Identity and small-talk vocabulary typical of the trust-building stage.
const std::vector<std::string> kPiPool = {
    "asl",    "name",    "age",     "grade",  "school", "class",
    "teacher", "hometown", "family", "sister", "brother", "cousin",
    "hobby",  "soccer",  "basketball", "guitar", "piano", "band",
    "myspace", "profile", "pic",    "photo",  "mall",   "pizza",
};

// Escalating-intimacy vocabulary; also the vocabulary hard negatives borrow.
const std::vector<std::string> kGStagePool = {
    "secret", "special", "trust",  "promise", "private", "mature",
    "cute",   "pretty",  "sweet",  "shy",     "crush",   "kiss",
    "cuddle", "touch",   "body",   "webcam",  "cam",     "bedroom",
    "alone",  "delete",  "whisper", "love",   "miss",    "naughty",
};

// Meeting-solicitation vocabulary.
const std::vector<std::string> kAStagePool = {
    "meet",      "meetup",  "address", "street",  "park",    "car",
    "drive",     "pickup",  "bus",     "station", "saturday", "sunday",
    "weekend",   "afternoon", "directions", "house", "apartment", "visit",
};

// Neutral chatter present in every chat type.
const std::vector<std::string> kFillerPool = {
    "lol",  "haha", "ok",    "okay", "yeah",     "yep",    "nope",
    "brb",  "gtg",  "idk",   "omg",  "cool",     "nice",   "wow",
    "hmm",  "sure", "maybe", "whatever", "anyway", "really", "kk",
    "thx",  "np",   "hbu",   "wyd",  "nm",       "bored",  "tired",
};

// Topics that only ordinary negative chats talk about.
const std::vector<std::string> kNeutralPool = {
    "weather", "rain",   "sunny",  "snow",    "news",    "election",
    "traffic", "recipe", "cooking", "dinner",  "lunch",   "coffee",
    "tv",      "show",   "series", "episode", "video",   "phone",
    "laptop",  "computer", "internet", "wifi", "football", "playoffs",
};

// Context markers of consenting-adult conversations; the signal that keeps
// hard negatives separable from grooming chats at the window level.
const std::vector<std::string> kAdultPool = {
    "adult",  "adults",  "consenting", "grown",  "wife",   "husband",
    "divorced", "married", "office",   "work",   "boss",   "coworker",
    "bar",    "drinks",  "wine",      "beer",   "hotel",  "motel",
    "casino", "dating",  "tinder",    "rent",
};

const std::vector<std::string>& pool_for(Strategy s) {
  switch (s) {
    case Strategy::kPI: return kPiPool;
    case Strategy::kG: return kGStagePool;
    case Strategy::kA: return kAStagePool;
    case Strategy::kOthers: return kFillerPool;
  }
  return kFillerPool;
}

const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[static_cast<std::size_t>(rng.bounded(pool.size()))];
}

std::size_t sample_length(double mean, double std, Rng& rng) {
  const double raw = std::round(rng.normal(mean, std));
  return static_cast<std::size_t>(std::max(3.0, raw));
}

std::string make_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%04zu", prefix, i);
  return buf;
}

std::string positive_turn_text(Strategy s, Rng& rng) {
  const auto& pool = pool_for(s);
  const std::size_t n_tokens = 4 + rng.bounded(4);
  std::string text;
  for (std::size_t i = 0; i < n_tokens; ++i) {
    if (!text.empty()) text += ' ';
    if (s != Strategy::kOthers && rng.bernoulli(0.25)) {
      text += pick(kFillerPool, rng);
    } else {
      text += pick(pool, rng);
    }
  }
  return text;
}

// Ordinary negative chats mostly talk about neutral topics, but a minority
// of them flirt: suggestive vocabulary at low density, still label 0. These
// are what per-turn thresholding trips over once scores compound across a
// whole chat.
std::string plain_negative_turn_text(Rng& rng, double suggestive_rate) {
  const std::size_t n_tokens = 4 + rng.bounded(4);
  std::string text;
  for (std::size_t i = 0; i < n_tokens; ++i) {
    if (!text.empty()) text += ' ';
    if (rng.uniform() < suggestive_rate) {
      text += rng.bernoulli(0.8) ? pick(kGStagePool, rng)
                                 : pick(kAStagePool, rng);
    } else {
      text += rng.bernoulli(0.5) ? pick(kNeutralPool, rng)
                                 : pick(kFillerPool, rng);
    }
  }
  return text;
}

// Hard negatives open with adult context markers (as adult conversations
// do), then reuse G-stage vocabulary throughout.
std::string hard_negative_turn_text(Rng& rng, bool opening_turn) {
  const std::size_t n_tokens = 4 + rng.bounded(4);
  std::string text;
  for (std::size_t i = 0; i < n_tokens; ++i) {
    if (!text.empty()) text += ' ';
    if (opening_turn && i == 0) {
      text += pick(kGStagePool, rng);
      continue;
    }
    const double u = rng.uniform();
    if (u < 0.58) text += pick(kGStagePool, rng);
    else if (u < 0.70) text += pick(kAdultPool, rng);
    else text += pick(kFillerPool, rng);
  }
  return text;
}

Chat make_positive_chat(std::size_t index, const GenConfig& config, Rng rng) {
  Chat chat;
  chat.id = make_id("pos", index);
  chat.label = 1;
  const std::size_t length =
      sample_length(config.positive_length_mean, config.positive_length_std, rng);
  const auto schedule = stage_schedule(length, config.pi_fraction,
                                       config.g_fraction, config.a_fraction, rng);
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    Turn turn;
    turn.author = (t % 2 == 0) ? Author::kInitiator : Author::kRespondent;
    turn.strategy = schedule[t];
    turn.risk = risk_for_strategy(turn.strategy);
    turn.text = positive_turn_text(turn.strategy, rng);
    chat.turns.push_back(std::move(turn));
  }
  return chat;
}

Chat make_negative_chat(std::size_t index, bool hard, const GenConfig& config,
                        Rng rng) {
  Chat chat;
  chat.id = make_id("neg", index);
  chat.label = 0;
  const std::size_t length =
      sample_length(config.negative_length_mean, config.negative_length_std, rng);
  // Short ordinary negatives are often brief flirty exchanges: suggestive
  // vocabulary at a per-chat density, still label 0.
  double suggestive_rate = 0.0;
  if (!hard && length <= 20 && rng.bernoulli(0.5)) {
    suggestive_rate = 0.08 + 0.17 * rng.uniform();
  }
  for (std::size_t t = 0; t < length; ++t) {
    Turn turn;
    turn.author = (t % 2 == 0) ? Author::kInitiator : Author::kRespondent;
    turn.strategy = Strategy::kOthers;
    turn.risk = 0;
    turn.text = hard ? hard_negative_turn_text(rng, t == 0)
                     : plain_negative_turn_text(rng, suggestive_rate);
    chat.turns.push_back(std::move(turn));
  }
  return chat;
}

}  // namespace

const std::vector<std::string>& pi_stage_pool() { return kPiPool; }
const std::vector<std::string>& g_stage_pool() { return kGStagePool; }
const std::vector<std::string>& a_stage_pool() { return kAStagePool; }
const std::vector<std::string>& filler_pool() { return kFillerPool; }
const std::vector<std::string>& neutral_pool() { return kNeutralPool; }
const std::vector<std::string>& adult_pool() { return kAdultPool; }

void validate_config(const GenConfig& config) {
  if (config.hard_negative_fraction < 0.0 || config.hard_negative_fraction > 1.0) {
    throw ValidationError("hard_negative_fraction must be in [0, 1]");
  }
  if (config.positive_length_mean < 1.0 || config.negative_length_mean < 1.0) {
    throw ValidationError("length means must be >= 1");
  }
  if (config.positive_length_std < 0.0 || config.negative_length_std < 0.0) {
    throw ValidationError("length standard deviations must be >= 0");
  }
  if (config.pi_fraction < 0.0 || config.g_fraction < 0.0 ||
      config.a_fraction < 0.0) {
    throw ValidationError("stage fractions must be non-negative");
  }
  if (config.pi_fraction + config.g_fraction + config.a_fraction >
      1.0 + 1e-9) {
    throw ValidationError("stage fractions must sum to <= 1");
  }
}

std::vector<Strategy> stage_schedule(std::size_t length, double pi_fraction,
                                     double g_fraction, double a_fraction,
                                     Rng& rng) {
  if (length < 1) {
    throw ValidationError("stage_schedule: length must be >= 1");
  }
  auto count_for = [length](double fraction) {
    return static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(length)));
  };
  std::size_t n_pi = count_for(pi_fraction);
  std::size_t n_g = count_for(g_fraction);
  std::size_t n_a = count_for(a_fraction);
  // Risky stages take priority when there is no room for everything.
  if (g_fraction > 0.0 && n_g == 0) n_g = 1;
  if (a_fraction > 0.0 && n_a == 0) n_a = 1;
  if (pi_fraction > 0.0 && n_pi == 0) n_pi = 1;
  while (n_g + n_a > length) {
    if (n_a > n_g || n_g == 0) --n_a;
    else --n_g;
  }
  while (n_pi + n_g + n_a > length) {
    if (n_pi > 0) --n_pi;
    else if (n_g >= n_a && n_g > 1) --n_g;
    else if (n_a > 0) --n_a;
    else --n_g;
  }
  const std::size_t n_others = length - n_pi - n_g - n_a;

  // Scatter the Others slots, then fill the rest in stage order.
  std::vector<std::size_t> slots(length);
  for (std::size_t i = 0; i < length; ++i) slots[i] = i;
  rng.shuffle(slots);
  std::vector<bool> is_other(length, false);
  for (std::size_t i = 0; i < n_others; ++i) is_other[slots[i]] = true;

  std::vector<Strategy> schedule(length, Strategy::kOthers);
  std::size_t emitted = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (is_other[i]) continue;
    if (emitted < n_pi) schedule[i] = Strategy::kPI;
    else if (emitted < n_pi + n_g) schedule[i] = Strategy::kG;
    else schedule[i] = Strategy::kA;
    ++emitted;
  }
  return schedule;
}

std::vector<Strategy> stage_schedule(std::size_t length, double pi_fraction,
                                     double g_fraction, double a_fraction,
                                     std::uint64_t seed) {
  Rng rng(seed);
  return stage_schedule(length, pi_fraction, g_fraction, a_fraction, rng);
}

Corpus generate(const GenConfig& config) {
  validate_config(config);
  Corpus corpus;
  const Rng base(config.seed);
  for (std::size_t i = 0; i < config.n_positive; ++i) {
    corpus.chats.push_back(make_positive_chat(i, config, base.fork(i)));
  }
  const auto n_hard = static_cast<std::size_t>(std::llround(
      config.hard_negative_fraction * static_cast<double>(config.n_negative)));
  for (std::size_t i = 0; i < config.n_negative; ++i) {
    corpus.chats.push_back(make_negative_chat(
        i, i < n_hard, config, base.fork(0x10000 + i)));
  }
  return corpus;
}

}  // namespace espd
