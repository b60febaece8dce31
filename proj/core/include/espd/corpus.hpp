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

#ifndef ESPD_CORPUS_HPP_
#define ESPD_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace espd {

// Turn-level conversation strategy. PI and Others are non-risky stages;
// G (escalating intimacy) and A (meeting solicitation) are risky.
enum class Strategy { kPI, kG, kA, kOthers };

enum class Author { kInitiator, kRespondent };

enum class Split { kTrain, kValid, kTest };

const char* to_string(Strategy s);
const char* to_string(Author a);

// Returns the binary risk label implied by a strategy: 1 for {G, A}.
int risk_for_strategy(Strategy s);

// One utterance. `risk` is stored explicitly so corpora from labeling
// schemes without strategy annotations stay loadable (relaxed mode).
struct Turn {
  Author author = Author::kInitiator;
  std::string text;
  Strategy strategy = Strategy::kOthers;
  int risk = 0;
};

struct Chat {
  std::string id;
  std::vector<Turn> turns;
  int label = 0;  // 1 = grooming (positive), 0 = normal (negative)

  std::size_t size() const { return turns.size(); }
};

struct Corpus {
  std::vector<Chat> chats;
  Split split = Split::kTrain;
  // True when loaded without the risk==f(strategy) coupling check.
  bool relaxed_labels = false;
};

struct CorpusStats {
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  double positive_length_mean = 0.0;
  double positive_length_std = 0.0;
  double negative_length_mean = 0.0;
  double negative_length_std = 0.0;
  // Median over negative chat lengths; mean-of-middle-two for even counts.
  // 0 when the corpus has no negative chats.
  double median_negative_length = 0.0;
};

enum class LabelMode {
  kStrict,   // require risk == 1 exactly for strategies in {G, A}
  kRelaxed,  // require only risk in {0, 1}
};

// Validates a single chat against the corpus invariants. Throws
// ValidationError naming the chat id and turn index on the first violation.
void validate_chat(const Chat& chat, LabelMode mode);

// Loads a JSON Lines corpus file. Each line is one chat object:
//   {"id": ..., "label": 0|1, "turns": [{"author": ..., "text": ...,
//    "strategy": "PI"|"G"|"A"|"Others", "risk": 0|1}, ...]}
// Unknown fields are rejected. Throws ParseError (with line number),
// ValidationError (with chat id and turn index), or IoError.
Corpus load_corpus(const std::string& path, LabelMode mode = LabelMode::kStrict);

// Parses corpus text from a stream; `origin` names the source in errors.
Corpus parse_corpus(std::istream& in, LabelMode mode, const std::string& origin);

// Canonical serialization: one compact JSON object per line, keys in
// alphabetical order, trailing newline per line. load followed by save is
// byte-identical for canonically formatted input.
void save_corpus(const Corpus& corpus, const std::string& path);
std::string corpus_to_jsonl(const Corpus& corpus);

// Keeps every positive chat and exactly ratio * n_positive negatives chosen
// by seeded uniform sampling without replacement. Relative chat order is
// preserved. Throws ValidationError when negatives are insufficient.
Corpus downsample_negatives(const Corpus& corpus, std::uint64_t ratio,
                            std::uint64_t seed);

// Per-class count and length statistics. Throws ValidationError on an
// empty corpus.
CorpusStats corpus_stats(const Corpus& corpus);

// Median with the mean-of-middle-two convention; values need not be sorted.
double median(std::vector<double> values);

}  // namespace espd

#endif  // ESPD_CORPUS_HPP_
