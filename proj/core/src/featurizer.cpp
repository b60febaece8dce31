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

#include "espd/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "espd/error.hpp"
#include "espd/rng.hpp"

namespace espd {

namespace {

constexpr char kNgramJoin = '\x1e';

bool is_power_of_two(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      current += lowercase
                     ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                     : c;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace

std::uint64_t FeaturizerConfig::digest() const {
  std::uint64_t h = fnv1a64("espd-featurizer-v1", 18, hash_seed);
  for (int order : ngram_orders) {
    h = fnv1a64(&order, sizeof(order), h);
  }
  h = fnv1a64(&dim, sizeof(dim), h);
  const int lc = lowercase ? 1 : 0;
  h = fnv1a64(&lc, sizeof(lc), h);
  return h;
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) ++i;
    else if (a.indices[i] > b.indices[j]) ++j;
    else sum += static_cast<double>(a.values[i++]) * static_cast<double>(b.values[j++]);
  }
  return sum;
}

Featurizer::Featurizer(FeaturizerConfig config) : config_(std::move(config)) {
  if (!is_power_of_two(config_.dim)) {
    throw ValidationError("featurizer dimension must be a power of two");
  }
  if (config_.ngram_orders.empty()) {
    throw ValidationError("featurizer needs at least one n-gram order");
  }
  for (int order : config_.ngram_orders) {
    if (order < 1) throw ValidationError("n-gram orders must be >= 1");
  }
}

std::uint32_t Featurizer::bucket(std::string_view ngram) const {
  const std::uint64_t h = fnv1a64(ngram.data(), ngram.size(), config_.hash_seed);
  return static_cast<std::uint32_t>(h & (config_.dim - 1));
}

SparseVector Featurizer::featurize(std::string_view text) const {
  const auto tokens = tokenize(text, config_.lowercase);
  std::vector<std::pair<std::uint32_t, float>> raw;
  std::string ngram;
  for (int order : config_.ngram_orders) {
    if (tokens.size() < static_cast<std::size_t>(order)) continue;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      ngram.clear();
      for (int k = 0; k < order; ++k) {
        if (k > 0) ngram += kNgramJoin;
        ngram += tokens[i + k];
      }
      const std::uint64_t h =
          fnv1a64(ngram.data(), ngram.size(), config_.hash_seed);
      const auto index = static_cast<std::uint32_t>(h & (config_.dim - 1));
      const float sign = (h >> 63) ? -1.0f : 1.0f;
      raw.emplace_back(index, sign);
    }
  }
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  SparseVector out;
  double norm_sq = 0.0;
  std::size_t i = 0;
  while (i < raw.size()) {
    const std::uint32_t index = raw[i].first;
    float sum = 0.0f;
    while (i < raw.size() && raw[i].first == index) sum += raw[i++].second;
    if (sum != 0.0f) {
      out.indices.push_back(index);
      out.values.push_back(sum);
      norm_sq += static_cast<double>(sum) * static_cast<double>(sum);
    }
  }
  if (norm_sq > 0.0) {
    const auto inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (float& v : out.values) v *= inv;
  }
  return out;
}

}  // namespace espd
