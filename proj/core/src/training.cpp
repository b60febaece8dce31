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

#include "espd/training.hpp"

#include <algorithm>
#include <cmath>

#include "espd/error.hpp"

namespace espd {

namespace {

struct SftExample {
  std::uint32_t chat = 0;
  int t = 1;
  int label = 0;
  double weight = 0.0;  // class_weight / (|D| * n_c)
};

void check_two_classes(const Corpus& corpus) {
  bool has_positive = false, has_negative = false;
  bool has_risky = false, has_safe = false;
  for (const Chat& chat : corpus.chats) {
    (chat.label == 1 ? has_positive : has_negative) = true;
    for (const Turn& turn : chat.turns) {
      (turn.risk == 1 ? has_risky : has_safe) = true;
    }
  }
  if (!has_positive || !has_negative || !has_risky || !has_safe) {
    throw ValidationError(
        "training requires both chat classes and both turn labels");
  }
}

// The negative-chat sampling rule: long chats carry most of the turn-level
// signal, so chats with more than 100 turns are kept first.
std::vector<std::size_t> select_chats(const Corpus& corpus,
                                      std::size_t max_negatives, Rng rng) {
  std::vector<std::size_t> selected;
  if (max_negatives == 0) {
    selected.resize(corpus.chats.size());
    for (std::size_t i = 0; i < selected.size(); ++i) selected[i] = i;
    return selected;
  }
  std::vector<std::size_t> long_negatives, short_negatives;
  for (std::size_t i = 0; i < corpus.chats.size(); ++i) {
    const Chat& chat = corpus.chats[i];
    if (chat.label == 1) {
      selected.push_back(i);
    } else if (chat.size() > 100) {
      long_negatives.push_back(i);
    } else {
      short_negatives.push_back(i);
    }
  }
  rng.shuffle(long_negatives);
  rng.shuffle(short_negatives);
  long_negatives.insert(long_negatives.end(), short_negatives.begin(),
                        short_negatives.end());
  if (long_negatives.size() > max_negatives) {
    long_negatives.resize(max_negatives);
  }
  selected.insert(selected.end(), long_negatives.begin(), long_negatives.end());
  std::sort(selected.begin(), selected.end());
  return selected;
}

}  // namespace

AdamOptimizer::AdamOptimizer(const PolicyParams& params, double beta1,
                             double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  m_w1_.assign(params.w1.size(), 0.0);
  v_w1_.assign(params.w1.size(), 0.0);
  m_b1_.assign(params.b1.size(), 0.0);
  v_b1_.assign(params.b1.size(), 0.0);
  m_w2_.assign(params.w2.size(), 0.0);
  v_w2_.assign(params.w2.size(), 0.0);
  m_b2_.assign(params.b2.size(), 0.0);
  v_b2_.assign(params.b2.size(), 0.0);
}

void AdamOptimizer::step(PolicyParams* params, const GradBuffer& grad,
                         double lr) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));

  auto update_one = [&](double g, double& m, double& v, double& theta) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g * g;
    theta -= lr * (m / bc1) / (std::sqrt(v / bc2) + epsilon_);
  };

  const std::uint32_t hidden = params->hidden;
  for (const auto& [feature, row] : grad.w1_rows) {
    const std::size_t base = static_cast<std::size_t>(feature) * hidden;
    for (std::uint32_t h = 0; h < hidden; ++h) {
      update_one(row[h], m_w1_[base + h], v_w1_[base + h],
                 params->w1[base + h]);
    }
  }
  for (std::size_t i = 0; i < grad.b1.size(); ++i) {
    update_one(grad.b1[i], m_b1_[i], v_b1_[i], params->b1[i]);
  }
  for (std::size_t i = 0; i < grad.w2.size(); ++i) {
    update_one(grad.w2[i], m_w2_[i], v_w2_[i], params->w2[i]);
  }
  for (std::size_t i = 0; i < grad.b2.size(); ++i) {
    update_one(grad.b2[i], m_b2_[i], v_b2_[i], params->b2[i]);
  }
}

double sft_loss(const Corpus& corpus, const WindowFeatureCache& cache,
                const PolicyParams& params, double class_weight) {
  double total = 0.0;
  std::size_t n_chats = 0;
  for (std::size_t c = 0; c < corpus.chats.size(); ++c) {
    const Chat& chat = corpus.chats[c];
    if (chat.turns.empty()) continue;
    double chat_loss = 0.0;
    for (int t = 1; t <= static_cast<int>(chat.size()); ++t) {
      const int y = chat.turns[static_cast<std::size_t>(t - 1)].risk;
      const ForwardPass fwd = forward_pass(params, cache.at(c, t));
      const double weight = y == 1 ? class_weight : 1.0;
      chat_loss += -weight * fwd.log_probs[y];
    }
    total += chat_loss / static_cast<double>(chat.size());
    ++n_chats;
  }
  return n_chats > 0 ? total / static_cast<double>(n_chats) : 0.0;
}

SftResult sft_train(const Corpus& corpus, const Featurizer& featurizer,
                    const SftConfig& config, const PolicyParams* init) {
  if (config.learning_rate <= 0.0 || config.batch_size == 0 ||
      config.epochs == 0 || config.class_weight <= 0.0) {
    throw ValidationError("sft config values must be positive");
  }
  if (init != nullptr &&
      init->featurizer.digest() != featurizer.config().digest()) {
    throw ValidationError("sft warm start uses a different featurizer");
  }
  check_two_classes(corpus);

  const Rng base(config.seed);
  const auto chat_indices =
      select_chats(corpus, config.max_negatives, base.fork(0xA));

  Corpus subset;
  subset.split = corpus.split;
  subset.relaxed_labels = corpus.relaxed_labels;
  for (std::size_t i : chat_indices) subset.chats.push_back(corpus.chats[i]);

  const WindowFeatureCache cache =
      featurize_windows(subset, featurizer, config.window);

  std::vector<SftExample> examples;
  const auto n_chats = static_cast<double>(subset.chats.size());
  for (std::size_t c = 0; c < subset.chats.size(); ++c) {
    const Chat& chat = subset.chats[c];
    for (int t = 1; t <= static_cast<int>(chat.size()); ++t) {
      const int y = chat.turns[static_cast<std::size_t>(t - 1)].risk;
      SftExample ex;
      ex.chat = static_cast<std::uint32_t>(c);
      ex.t = t;
      ex.label = y;
      ex.weight = (y == 1 ? config.class_weight : 1.0) /
                  (n_chats * static_cast<double>(chat.size()));
      examples.push_back(ex);
    }
  }

  SftResult result;
  result.params = init != nullptr
                      ? *init
                      : init_policy(featurizer.config(), config.hidden,
                                    base.fork(0xB).next_u64());
  for (const Chat& chat : subset.chats) {
    result.training_chat_ids.push_back(chat.id);
  }
  result.epoch_losses.push_back(
      sft_loss(subset, cache, result.params, config.class_weight));

  AdamOptimizer optimizer(result.params);
  GradBuffer grad;
  const auto n_examples = static_cast<double>(examples.size());

  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng = base.fork(0x100 + epoch);
    epoch_rng.shuffle(examples);
    for (std::size_t begin = 0; begin < examples.size();
         begin += config.batch_size) {
      const std::size_t end =
          std::min(examples.size(), begin + config.batch_size);
      grad.reset(result.params.hidden);
      const auto batch_n = static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const SftExample& ex = examples[i];
        const SparseVector& x = cache.at(ex.chat, ex.t);
        const ForwardPass fwd = forward_pass(result.params, x);
        if (!std::isfinite(fwd.log_probs[ex.label])) {
          throw DivergenceError("sft: non-finite loss at epoch " +
                                std::to_string(epoch));
        }
        // Descent on the weighted cross-entropy, scaled so the expected
        // batch gradient equals the full-objective gradient.
        const double coefficient =
            -(n_examples * ex.weight / batch_n);
        accumulate_log_prob_grad(result.params, x, fwd,
                                 ex.label == 1 ? Action::kStop
                                               : Action::kContinue,
                                 coefficient, &grad);
      }
      optimizer.step(&result.params, grad, config.learning_rate);
    }
    const double loss =
        sft_loss(subset, cache, result.params, config.class_weight);
    if (!std::isfinite(loss)) {
      throw DivergenceError("sft: non-finite epoch loss");
    }
    result.epoch_losses.push_back(loss);
  }
  return result;
}

double lr_at(std::uint32_t step, const RlConfig& config) {
  if (config.period == 0 || config.period_mult == 0) {
    throw ValidationError("schedule period and multiplier must be >= 1");
  }
  if (config.warmup >= config.period) {
    throw ValidationError("schedule warmup must be shorter than the period");
  }
  std::uint32_t remaining = step;
  std::uint32_t period_len = config.period;
  int cycle = 0;
  while (remaining >= period_len) {
    remaining -= period_len;
    period_len *= config.period_mult;
    ++cycle;
  }
  const double peak =
      config.peak_lr * std::pow(config.peak_decay, static_cast<double>(cycle));
  const double base = config.learning_rate;
  if (remaining < config.warmup) {
    return base + (peak - base) * static_cast<double>(remaining) /
                      static_cast<double>(config.warmup);
  }
  const double progress = static_cast<double>(remaining - config.warmup) /
                          static_cast<double>(period_len - config.warmup);
  return base + (peak - base) * 0.5 *
                    (1.0 + std::cos(3.141592653589793238462643383279 * progress));
}

RlResult reinforce_train(const Corpus& corpus, const PolicyParams& init,
                         const RlConfig& config) {
  if (config.learning_rate <= 0.0 || config.batch_size == 0 ||
      config.epochs == 0 || config.discount <= 0.0 || config.discount > 1.0 ||
      config.peak_lr <= 0.0 || config.peak_decay <= 0.0) {
    throw ValidationError("rl config values must be positive");
  }
  if (corpus.chats.empty()) {
    throw ValidationError("rl training requires a non-empty corpus");
  }

  const Featurizer featurizer(init.featurizer);
  const WindowFeatureCache cache =
      featurize_windows(corpus, featurizer, config.window);

  std::vector<double> neg_lengths;
  for (const Chat& chat : corpus.chats) {
    if (chat.label == 0) neg_lengths.push_back(static_cast<double>(chat.size()));
  }
  const double median_neg = median(std::move(neg_lengths));

  std::vector<Environment> envs;
  envs.reserve(corpus.chats.size());
  for (const Chat& chat : corpus.chats) {
    envs.emplace_back(chat, median_neg, config.scheme, config.window);
  }

  RlResult result;
  result.params = init;

  const Rng base(config.seed);
  AdamOptimizer optimizer(result.params);
  GradBuffer grad;

  struct VisitedStep {
    int t;
    Action action;
    ForwardPass fwd;
  };

  std::vector<std::size_t> order(corpus.chats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(epoch, config);
    Rng epoch_rng = base.fork(0x1000 + epoch);
    epoch_rng.shuffle(order);

    double return_sum = 0.0;
    std::size_t episode_count = 0;

    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + config.batch_size);
      grad.reset(result.params.hidden);
      const auto batch_n = static_cast<double>(end - begin);

      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t chat_idx = order[i];
        const Environment& env = envs[chat_idx];
        Rng episode_rng = epoch_rng.fork(chat_idx);

        std::vector<VisitedStep> visited;
        EpisodeState state = env.reset();
        double terminal_reward = 0.0;
        while (true) {
          const SparseVector& x = cache.at(chat_idx, state.t);
          ForwardPass fwd = forward_pass(result.params, x);
          const Action action = episode_rng.uniform() < fwd.probs[1]
                                    ? Action::kStop
                                    : Action::kContinue;
          visited.push_back({state.t, action, std::move(fwd)});
          const Environment::StepResult sr = env.step(state, action);
          state = sr.state;
          if (sr.done) {
            terminal_reward = sr.reward;
            break;
          }
        }
        return_sum += terminal_reward;
        ++episode_count;

        // Every visited step is credited with the discounted terminal
        // reward; intermediate rewards are zero by construction.
        const auto horizon = static_cast<double>(visited.size());
        for (std::size_t k = 0; k < visited.size(); ++k) {
          const VisitedStep& step = visited[k];
          const double discounted =
              std::pow(config.discount, horizon - 1.0 - static_cast<double>(k)) *
              terminal_reward;
          const double coefficient =
              (config.literal_update_sign ? discounted : -discounted) / batch_n;
          accumulate_log_prob_grad(result.params, cache.at(chat_idx, step.t),
                                   step.fwd, step.action, coefficient, &grad);
        }
      }

      if (!grad.all_finite()) {
        throw DivergenceError("reinforce: non-finite gradient at epoch " +
                              std::to_string(epoch));
      }
      optimizer.step(&result.params, grad, lr);
    }
    result.epoch_mean_returns.push_back(
        episode_count > 0 ? return_sum / static_cast<double>(episode_count)
                          : 0.0);
  }
  return result;
}

}  // namespace espd
