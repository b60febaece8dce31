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

#ifndef ESPD_SYNTHGEN_HPP_
#define ESPD_SYNTHGEN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "espd/corpus.hpp"
#include "espd/rng.hpp"

namespace espd {

// Desk-scale generator configuration. Positive chats walk the stage
// progression PI -> G -> A; negative chats are stage-free, and a configured
// fraction of them are hard negatives: adult conversations that reuse
// G-stage vocabulary while keeping label 0.
struct GenConfig {
  std::size_t n_positive = 50;
  std::size_t n_negative = 500;
  double hard_negative_fraction = 0.1;
  double positive_length_mean = 200.0;
  double positive_length_std = 60.0;
  double negative_length_mean = 36.0;
  double negative_length_std = 26.0;
  // Fractions of a positive chat spent in each stage; must sum to <= 1.
  // The remainder is Others filler interleaved anywhere.
  double pi_fraction = 0.35;
  double g_fraction = 0.45;
  double a_fraction = 0.20;
  std::uint64_t seed = 42;
};

void validate_config(const GenConfig& config);

// Stage-specific token pools. The PI/G/A core pools are pairwise disjoint;
// the filler pool is shared by every chat type; the adult pool marks hard
// negatives. Exposed for tests and for the analysis tooling.
const std::vector<std::string>& pi_stage_pool();
const std::vector<std::string>& g_stage_pool();
const std::vector<std::string>& a_stage_pool();
const std::vector<std::string>& filler_pool();
const std::vector<std::string>& neutral_pool();
const std::vector<std::string>& adult_pool();

// A length-n strategy sequence in which every PI index precedes every G
// index, every G index precedes every A index, and Others may appear
// anywhere. When a stage fraction is positive the stage is allocated at
// least one turn, risky stages (G, then A) first when length is scarce.
std::vector<Strategy> stage_schedule(std::size_t length, double pi_fraction,
                                     double g_fraction, double a_fraction,
                                     Rng& rng);
std::vector<Strategy> stage_schedule(std::size_t length, double pi_fraction,
                                     double g_fraction, double a_fraction,
                                     std::uint64_t seed);

// Generates a corpus deterministically from the config. The first
// round(hard_negative_fraction * n_negative) negative chats are the hard
// negatives; chats are emitted positives first, then negatives.
Corpus generate(const GenConfig& config);

}  // namespace espd

#endif  // ESPD_SYNTHGEN_HPP_
