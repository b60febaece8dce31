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

#include "espd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "espd/error.hpp"
#include "json.hpp"

namespace espd {

namespace {

constexpr char kMagic[8] = {'E', 'S', 'P', 'D', 'P', 'O', 'L', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_f64_vec(std::ostream& out, const std::vector<double>& v) {
  write_u64(out, v.size());
  for (double x : v) write_f64(out, x);
}

std::vector<double> read_f64_vec(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::vector<double> v(n);
  for (std::uint64_t i = 0; i < n; ++i) v[i] = read_f64(in);
  return v;
}

}  // namespace

PolicyParams init_policy(const FeaturizerConfig& config, std::uint32_t hidden,
                         std::uint64_t seed) {
  if (hidden == 0) throw ValidationError("hidden width must be >= 1");
  Featurizer validate(config);  // throws on a bad config
  PolicyParams params;
  params.featurizer = config;
  params.hidden = hidden;
  params.w1.resize(static_cast<std::size_t>(config.dim) * hidden);
  params.b1.assign(hidden, 0.0);
  params.w2.resize(static_cast<std::size_t>(hidden) * 2);
  params.b2.assign(2, 0.0);

  Rng rng(seed);
  for (double& w : params.w1) w = rng.normal(0.0, 1.0);
  const double out_scale = 0.5 / std::sqrt(static_cast<double>(hidden));
  for (double& w : params.w2) w = rng.normal(0.0, out_scale);
  return params;
}

ForwardPass forward_pass(const PolicyParams& params, const SparseVector& x) {
  const std::uint32_t hidden = params.hidden;
  ForwardPass fwd;
  fwd.pre_hidden.assign(params.b1.begin(), params.b1.end());
  for (std::size_t i = 0; i < x.indices.size(); ++i) {
    const std::uint32_t feature = x.indices[i];
    const auto value = static_cast<double>(x.values[i]);
    const double* row = &params.w1[static_cast<std::size_t>(feature) * hidden];
    for (std::uint32_t h = 0; h < hidden; ++h) {
      fwd.pre_hidden[h] += value * row[h];
    }
  }
  fwd.hidden.resize(hidden);
  for (std::uint32_t h = 0; h < hidden; ++h) {
    fwd.hidden[h] = fwd.pre_hidden[h] > 0.0 ? fwd.pre_hidden[h] : 0.0;
  }
  fwd.logits[0] = params.b2[0];
  fwd.logits[1] = params.b2[1];
  for (std::uint32_t h = 0; h < hidden; ++h) {
    fwd.logits[0] += fwd.hidden[h] * params.w2[h * 2];
    fwd.logits[1] += fwd.hidden[h] * params.w2[h * 2 + 1];
  }
  // log-sum-exp normalization keeps both probabilities strictly positive.
  const double peak = std::max(fwd.logits[0], fwd.logits[1]);
  const double lse =
      peak + std::log(std::exp(fwd.logits[0] - peak) +
                      std::exp(fwd.logits[1] - peak));
  fwd.log_probs[0] = fwd.logits[0] - lse;
  fwd.log_probs[1] = fwd.logits[1] - lse;
  fwd.probs[0] = std::exp(fwd.log_probs[0]);
  fwd.probs[1] = std::exp(fwd.log_probs[1]);
  return fwd;
}

ActionDistribution action_distribution(const PolicyParams& params,
                                       const SparseVector& x) {
  const ForwardPass fwd = forward_pass(params, x);
  if (!std::isfinite(fwd.probs[0]) || !std::isfinite(fwd.probs[1])) {
    throw ValidationError("action distribution is non-finite");
  }
  return {fwd.probs[0], fwd.probs[1]};
}

Action act(const PolicyParams& params, const SparseVector& x, ActMode mode,
           Rng* rng) {
  const ActionDistribution dist = action_distribution(params, x);
  if (mode == ActMode::kGreedy) {
    // Continue wins exact ties.
    return dist.p_stop > dist.p_continue ? Action::kStop : Action::kContinue;
  }
  if (rng == nullptr) {
    throw ValidationError("act(kSample) requires a random source");
  }
  return rng->uniform() < dist.p_stop ? Action::kStop : Action::kContinue;
}

void GradBuffer::reset(std::uint32_t hidden_width) {
  hidden = hidden_width;
  w1_rows.clear();
  b1.assign(hidden_width, 0.0);
  w2.assign(static_cast<std::size_t>(hidden_width) * 2, 0.0);
  b2.assign(2, 0.0);
}

bool GradBuffer::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(b1) || !finite(w2) || !finite(b2)) return false;
  for (const auto& [_, row] : w1_rows) {
    if (!finite(row)) return false;
  }
  return true;
}

void accumulate_log_prob_grad(const PolicyParams& params, const SparseVector& x,
                              const ForwardPass& fwd, Action action,
                              double coefficient, GradBuffer* grad) {
  const std::uint32_t hidden = params.hidden;
  const int a = action == Action::kStop ? 1 : 0;
  // d log pi / d logits = onehot(a) - probs
  const double dlogit0 = ((a == 0) ? 1.0 : 0.0) - fwd.probs[0];
  const double dlogit1 = ((a == 1) ? 1.0 : 0.0) - fwd.probs[1];

  std::vector<double> dhidden(hidden);
  for (std::uint32_t h = 0; h < hidden; ++h) {
    grad->w2[h * 2] += coefficient * fwd.hidden[h] * dlogit0;
    grad->w2[h * 2 + 1] += coefficient * fwd.hidden[h] * dlogit1;
    dhidden[h] = params.w2[h * 2] * dlogit0 + params.w2[h * 2 + 1] * dlogit1;
    if (fwd.pre_hidden[h] <= 0.0) dhidden[h] = 0.0;  // rectifier gate
    grad->b1[h] += coefficient * dhidden[h];
  }
  grad->b2[0] += coefficient * dlogit0;
  grad->b2[1] += coefficient * dlogit1;

  for (std::size_t i = 0; i < x.indices.size(); ++i) {
    const std::uint32_t feature = x.indices[i];
    const auto value = static_cast<double>(x.values[i]);
    auto [it, inserted] = grad->w1_rows.try_emplace(feature);
    if (inserted) it->second.assign(hidden, 0.0);
    std::vector<double>& row = it->second;
    const double scale = coefficient * value;
    for (std::uint32_t h = 0; h < hidden; ++h) {
      row[h] += scale * dhidden[h];
    }
  }
}

void save_policy(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(params.featurizer.ngram_orders.size()));
  for (int order : params.featurizer.ngram_orders) {
    write_u32(out, static_cast<std::uint32_t>(order));
  }
  write_u32(out, params.featurizer.dim);
  write_u64(out, params.featurizer.hash_seed);
  write_u32(out, params.featurizer.lowercase ? 1 : 0);
  write_u32(out, params.hidden);
  write_f64_vec(out, params.w1);
  write_f64_vec(out, params.b1);
  write_f64_vec(out, params.w2);
  write_f64_vec(out, params.b2);
  if (!out) throw IoError("write failed: " + path);
}

PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open parameter file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path + ": not an espd parameter file (bad magic)");
  }
  PolicyParams params;
  const std::uint32_t n_orders = read_u32(in);
  if (n_orders > 8) throw ParseError(path + ": implausible n-gram order count");
  params.featurizer.ngram_orders.clear();
  for (std::uint32_t i = 0; i < n_orders; ++i) {
    params.featurizer.ngram_orders.push_back(static_cast<int>(read_u32(in)));
  }
  params.featurizer.dim = read_u32(in);
  params.featurizer.hash_seed = read_u64(in);
  params.featurizer.lowercase = read_u32(in) != 0;
  params.hidden = read_u32(in);
  params.w1 = read_f64_vec(in);
  params.b1 = read_f64_vec(in);
  params.w2 = read_f64_vec(in);
  params.b2 = read_f64_vec(in);
  if (!in) throw ParseError(path + ": truncated parameter file");
  const auto expected_w1 =
      static_cast<std::size_t>(params.featurizer.dim) * params.hidden;
  if (params.w1.size() != expected_w1 || params.b1.size() != params.hidden ||
      params.w2.size() != static_cast<std::size_t>(params.hidden) * 2 ||
      params.b2.size() != 2) {
    throw ParseError(path + ": parameter shapes are inconsistent");
  }
  return params;
}

std::string policy_to_json(const PolicyParams& params) {
  nlohmann::json obj = {
      {"format", "espd-policy-v1"},
      {"featurizer",
       {{"ngram_orders", params.featurizer.ngram_orders},
        {"dim", params.featurizer.dim},
        {"hash_seed", params.featurizer.hash_seed},
        {"lowercase", params.featurizer.lowercase}}},
      {"hidden", params.hidden},
      {"w1", params.w1},
      {"b1", params.b1},
      {"w2", params.w2},
      {"b2", params.b2},
  };
  return obj.dump(2) + "\n";
}

std::uint64_t policy_digest(const PolicyParams& params) {
  std::uint64_t h = params.featurizer.digest();
  h = fnv1a64(&params.hidden, sizeof(params.hidden), h);
  auto fold = [&h](const std::vector<double>& v) {
    h = fnv1a64(v.data(), v.size() * sizeof(double), h);
  };
  fold(params.w1);
  fold(params.b1);
  fold(params.w2);
  fold(params.b2);
  return h;
}

}  // namespace espd
