#pragma once

// Named trainable tensors plus the helpers every layer shares: binding
// parameters onto a tape, feed-forward stacks, and dropout key derivation.

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dygie/model/config.hpp"
#include "dygie/numeric/tape.hpp"

namespace dygie::model {

template <class S>
class ParamStore {
 public:
  numeric::Tensor<S>& add(const std::string& name, int rows, int cols);
  numeric::Tensor<S>& get(const std::string& name);
  const numeric::Tensor<S>& get(const std::string& name) const;
  bool has(const std::string& name) const { return tensors_.count(name) > 0; }
  const std::vector<std::string>& names() const { return names_; }
  int64_t total_size() const;

 private:
  std::vector<std::string> names_;  // insertion order; checkpoint record order
  std::unordered_map<std::string, numeric::Tensor<S>> tensors_;
};

struct ParamShape {
  std::string name;
  int rows;
  int cols;
};

// Every tensor the model owns, in one place. `vocab_rows` includes the unk
// and pad rows.
std::vector<ParamShape> param_shapes(const Config& config, int vocab_rows);

// Deterministic Glorot-uniform initialization keyed by (seed, name); biases
// start at zero. Pretrained vectors, when provided, overwrite the embedding
// rows.
template <class S>
ParamStore<S> init_params(const Config& config, int vocab_rows, uint64_t seed,
                          const numeric::Tensor<float>* pretrained = nullptr);

template <class S>
ParamStore<S> zeros_like(const ParamStore<S>& other);

// Dropout mask keys: derive_key(run_seed, {fnv1a(layer), step, instance}).
struct DropoutCtx {
  bool train = false;
  uint64_t run_seed = 0;
  uint64_t step = 0;
  uint64_t key(std::string_view layer, uint64_t instance) const;
};

// Memoizes tape.param() leaves so each tensor appears once per tape and its
// gradient can be read back by name after backward().
template <class S>
class ParamBank {
 public:
  using Var = typename numeric::Tape<S>::Var;
  ParamBank(numeric::Tape<S>& tape, const ParamStore<S>& store) : tape_(tape), store_(store) {}

  Var operator()(const std::string& name);
  const std::map<std::string, Var>& bound() const { return bound_; }
  numeric::Tape<S>& tape() { return tape_; }
  const ParamStore<S>& store() const { return store_; }

 private:
  numeric::Tape<S>& tape_;
  const ParamStore<S>& store_;
  std::map<std::string, Var> bound_;
};

// x -> [w0,b0, relu, dropout] x hidden_layers -> (w_last, b_last), linear out.
// Weight names are prefix.w0/.b0, prefix.w1/.b1, ...; `instance`
// disambiguates dropout masks across calls within one step.
template <class S>
typename numeric::Tape<S>::Var apply_ffnn(ParamBank<S>& bank, const std::string& prefix,
                                          typename numeric::Tape<S>::Var x, int hidden_layers,
                                          double dropout_rate, const DropoutCtx& ctx,
                                          uint64_t instance);

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class ParamBank<float>;
extern template class ParamBank<double>;

}  // namespace dygie::model
