#pragma once

// Adam with global-norm gradient clipping, one update per document.

#include <cmath>
#include <map>

#include "dygie/model/params.hpp"

namespace dygie::train {

template <class S>
class Adam {
 public:
  explicit Adam(const model::ParamStore<S>& params)
      : m_(model::zeros_like(params)), v_(model::zeros_like(params)) {}

  // One Adam step over every parameter present in `grads`, after scaling
  // all gradients so their global norm does not exceed clip_norm. Gradients
  // are read in place. Returns the pre-clip norm.
  double apply(model::ParamStore<S>& params,
               const std::map<std::string, const numeric::Tensor<S>*>& grads,
               const model::TrainSettings& settings) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
      for (S v : g->data) sq += static_cast<double>(v) * static_cast<double>(v);
    const double norm = std::sqrt(sq);
    const S scale =
        (norm > settings.clip_norm && norm > 0.0) ? static_cast<S>(settings.clip_norm / norm)
                                                  : S(1);

    ++step_;
    const S b1 = static_cast<S>(settings.beta1);
    const S b2 = static_cast<S>(settings.beta2);
    const S one_minus_b1 = S(1) - b1;
    const S one_minus_b2 = S(1) - b2;
    const S inv_bias1 = S(1) / static_cast<S>(1.0 - std::pow(settings.beta1, double(step_)));
    const S inv_bias2 = S(1) / static_cast<S>(1.0 - std::pow(settings.beta2, double(step_)));
    const S lr = static_cast<S>(settings.learning_rate);
    const S eps = static_cast<S>(settings.adam_eps);
    for (const auto& [name, grad] : grads) {
      auto& p = params.get(name);
      auto& m = m_.get(name);
      auto& v = v_.get(name);
      const S* g = grad->data.data();
      S* mp = m.data.data();
      S* vp = v.data.data();
      S* pp = p.data.data();
      const int64_t n = grad->size();
      for (int64_t i = 0; i < n; ++i) {
        const S gi = g[i] * scale;
        const S mi = b1 * mp[i] + one_minus_b1 * gi;
        const S vi = b2 * vp[i] + one_minus_b2 * gi * gi;
        mp[i] = mi;
        vp[i] = vi;
        pp[i] -= lr * (mi * inv_bias1) / (std::sqrt(vi * inv_bias2) + eps);
      }
    }
    return norm;
  }

  model::ParamStore<S>& moments_m() { return m_; }
  model::ParamStore<S>& moments_v() { return v_; }
  const model::ParamStore<S>& moments_m() const { return m_; }
  const model::ParamStore<S>& moments_v() const { return v_; }
  int64_t step() const { return step_; }
  void set_step(int64_t s) { step_ = s; }

 private:
  model::ParamStore<S> m_;
  model::ParamStore<S> v_;
  int64_t step_ = 0;
};

}  // namespace dygie::train
