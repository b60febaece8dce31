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

#ifndef ESPD_FEATURIZER_HPP_
#define ESPD_FEATURIZER_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace espd {

// Deterministic signed-hash bag-of-n-grams text representation. Stands in
// for a frozen text encoder: it has no trainable state, so the detection
// head is the only thing training ever touches.
struct FeaturizerConfig {
  std::vector<int> ngram_orders = {1, 2};
  std::uint32_t dim = 1u << 18;  // must be a power of two
  std::uint64_t hash_seed = 0x00e5'9d5e'edF0'0d11ULL;
  bool lowercase = true;

  // Stable content digest; embedded in parameter files so a mismatched
  // featurizer/params pair is rejected at load time.
  std::uint64_t digest() const;
};

// Sorted-by-index sparse vector with unit L2 norm (or empty for text with
// no tokens).
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<float> values;

  std::size_t nnz() const { return indices.size(); }
};

double dot(const SparseVector& a, const SparseVector& b);

class Featurizer {
 public:
  explicit Featurizer(FeaturizerConfig config);

  // Pure function of the text: whitespace tokenization (lowercased when
  // configured), n-grams of the configured orders hashed into dim buckets
  // with a sign bit, duplicate buckets merged, then L2-normalized.
  // Text with no tokens maps to the empty (zero) vector.
  SparseVector featurize(std::string_view text) const;

  // Bucket index for one n-gram; exposed so tests can construct token sets
  // with verified non-colliding hashes.
  std::uint32_t bucket(std::string_view ngram) const;

  const FeaturizerConfig& config() const { return config_; }

 private:
  FeaturizerConfig config_;
};

}  // namespace espd

#endif  // ESPD_FEATURIZER_HPP_
