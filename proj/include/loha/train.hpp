#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "loha/dataset.hpp"
#include "loha/nn.hpp"
#include "loha/prng.hpp"

namespace loha {

struct TrainResult {
  Model model;
  std::vector<double> loss_history;  // per-epoch mean squared log loss
};

// Mean of (y - log(target + 1))^2 over the dataset, evaluated in double
// precision.
inline double evaluate_loss(const Model& m, const Dataset& ds) {
  if (ds.examples.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  Trace<double> trace;
  double sum = 0.0;
  for (const TrainingExample& ex : ds.examples) {
    double err = forward<double>(m, ex.input, trace) - std::log1p(ex.target);
    sum += err * err;
  }
  return sum / static_cast<double>(ds.examples.size());
}

// Mean of |prediction - target| / max(target, 1) over the dataset, with
// predictions on the h_k scale (exp-transformed and clamped like
// predict_hk).
inline double mean_absolute_relative_error(const Model& m, const Dataset& ds) {
  if (ds.examples.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  Predictor pred(m);
  double sum = 0.0;
  for (const TrainingExample& ex : ds.examples)
    sum += std::abs(pred.predict_hk(ex.input) - ex.target) / std::max(ex.target, 1.0);
  return sum / static_cast<double>(ds.examples.size());
}

// Minimizes the mean squared error between the network output and
// log(target + 1) with mini-batch gradient descent using adaptive
// per-parameter step sizes: first and second gradient moment estimates with
// decay 0.9 / 0.999, bias-corrected, step = lr * m_hat / (sqrt(v_hat) +
// 1e-8), one step per batch. Initialization and the per-epoch example
// shuffle both derive from `seed`, so results are reproducible. Reported
// per-epoch loss is the mean over the examples as they were trained on.
inline TrainResult train(const Dataset& data, int epochs, int batch_size, double learning_rate,
                         std::uint64_t seed, int filters = 8) {
  if (data.examples.empty()) throw std::invalid_argument("training dataset is empty");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  for (const TrainingExample& ex : data.examples)
    if (ex.input.radius != data.radius)
      throw std::invalid_argument("dataset example radius differs from the declared K");

  Model model = make_model(data.radius, filters, derive_seed(seed, 0));
  Gradients<float> grads, moment1, moment2;
  grads.resize_like(model);
  moment1.resize_like(model);
  moment2.resize_like(model);

  std::vector<std::vector<float>*> wv, gv, m1v, m2v;
  model.visit_arrays([&](std::vector<float>& v) { wv.push_back(&v); });
  grads.visit_arrays([&](std::vector<float>& v) { gv.push_back(&v); });
  moment1.visit_arrays([&](std::vector<float>& v) { m1v.push_back(&v); });
  moment2.visit_arrays([&](std::vector<float>& v) { m2v.push_back(&v); });

  const std::size_t n = data.examples.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<float> log_target(n);
  for (std::size_t i = 0; i < n; ++i)
    log_target[i] = static_cast<float>(std::log1p(data.examples[i].target));

  Trace<float> trace;
  BackScratch<float> scratch;
  const float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
  const float lr = static_cast<float>(learning_rate);
  double beta1_pow = 1.0, beta2_pow = 1.0;

  TrainResult out;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    SplitMix64 rng(derive_seed(seed, 1 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);

    double loss_sum = 0.0;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(batch_size)) {
      const std::size_t bn = std::min(static_cast<std::size_t>(batch_size), n - at);
      const float inv_bn = 1.0f / static_cast<float>(bn);
      grads.zero();
      for (std::size_t k = at; k < at + bn; ++k) {
        const TrainingExample& ex = data.examples[order[k]];
        float err = forward<float>(model, ex.input, trace) - log_target[order[k]];
        loss_sum += static_cast<double>(err) * static_cast<double>(err);
        backward<float>(model, trace, 2.0f * err * inv_bn, grads, scratch);
      }

      beta1_pow *= beta1;
      beta2_pow *= beta2;
      const float corr1 = static_cast<float>(1.0 / (1.0 - beta1_pow));
      const float corr2 = static_cast<float>(1.0 / (1.0 - beta2_pow));
      for (std::size_t a = 0; a < wv.size(); ++a) {
        float* w = wv[a]->data();
        float* g = gv[a]->data();
        float* m1 = m1v[a]->data();
        float* m2 = m2v[a]->data();
        const std::size_t len = wv[a]->size();
        for (std::size_t i = 0; i < len; ++i) {
          m1[i] = beta1 * m1[i] + (1.0f - beta1) * g[i];
          m2[i] = beta2 * m2[i] + (1.0f - beta2) * g[i] * g[i];
          w[i] -= lr * (m1[i] * corr1) / (std::sqrt(m2[i] * corr2) + eps);
        }
      }
    }

    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("training diverged: non-finite loss in epoch " +
                               std::to_string(epoch));
    out.loss_history.push_back(epoch_loss);
  }
  out.model = std::move(model);
  return out;
}

}  // namespace loha
