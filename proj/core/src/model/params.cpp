#include "dygie/model/params.hpp"

#include <cmath>

#include "dygie/rng.hpp"

namespace dygie::model {

template <class S>
numeric::Tensor<S>& ParamStore<S>::add(const std::string& name, int rows, int cols) {
  auto [it, inserted] = tensors_.emplace(name, numeric::Tensor<S>({rows, cols}));
  if (!inserted) throw std::runtime_error("ParamStore: duplicate tensor name " + name);
  names_.push_back(name);
  return it->second;
}

template <class S>
numeric::Tensor<S>& ParamStore<S>::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("ParamStore: unknown tensor " + name);
  return it->second;
}

template <class S>
const numeric::Tensor<S>& ParamStore<S>::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("ParamStore: unknown tensor " + name);
  return it->second;
}

template <class S>
int64_t ParamStore<S>::total_size() const {
  int64_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

std::vector<ParamShape> param_shapes(const Config& config, int vocab_rows) {
  const int emb = config.net.embedding_dim;
  const int h = config.net.hidden;
  const int f = config.net.ffnn_hidden;
  const int a = config.net.attn_hidden;
  const int d = config.span_dim();
  const int td = config.token_dim();
  const int n_ent = config.schema.entity_count();
  const int n_rel = config.schema.relation_count();

  std::vector<ParamShape> shapes;
  shapes.push_back({"embed.tokens", vocab_rows, emb});
  shapes.push_back({"embed.width", config.net.max_span_width, config.net.width_dim});
  for (const char* dir : {"fw", "bw"}) {
    std::string p = std::string("lstm.") + dir;
    shapes.push_back({p + ".w_x", emb, 4 * h});
    shapes.push_back({p + ".w_h", h, 4 * h});
    shapes.push_back({p + ".b", 1, 4 * h});
  }
  shapes.push_back({"attn.w0", td, a});
  shapes.push_back({"attn.b0", 1, a});
  shapes.push_back({"attn.w1", a, 1});
  shapes.push_back({"attn.b1", 1, 1});

  auto ffnn = [&](const std::string& prefix, int in, int out) {
    shapes.push_back({prefix + ".w0", in, f});
    shapes.push_back({prefix + ".b0", 1, f});
    shapes.push_back({prefix + ".w1", f, f});
    shapes.push_back({prefix + ".b1", 1, f});
    shapes.push_back({prefix + ".w2", f, out});
    shapes.push_back({prefix + ".b2", 1, out});
  };
  ffnn("coref.unary", d, 1);
  ffnn("coref.pair", 3 * d, 1);
  ffnn("rel.unary", d, 1);
  ffnn("rel.pair", 2 * d, n_rel);
  shapes.push_back({"rel.proj", n_rel, d});  // A_R
  shapes.push_back({"gate.coref.w", d, 2 * d});
  shapes.push_back({"gate.rel.w", d, 2 * d});
  ffnn("head.entity", d, n_ent);
  ffnn("head.relation", 2 * d, n_rel);
  return shapes;
}

template <class S>
ParamStore<S> init_params(const Config& config, int vocab_rows, uint64_t seed,
                          const numeric::Tensor<float>* pretrained) {
  ParamStore<S> store;
  for (const auto& shape : param_shapes(config, vocab_rows)) {
    auto& t = store.add(shape.name, shape.rows, shape.cols);
    const bool is_bias = shape.name.find(".b") != std::string::npos && shape.rows == 1;
    if (is_bias) {
      // relu hidden-layer biases start at 0.1 to keep units live; output
      // and gate biases start at zero
      const bool hidden_bias = shape.name.ends_with(".b0") || shape.name.ends_with(".b1");
      if (hidden_bias)
        for (auto& v : t.data) v = static_cast<S>(0.1);
      continue;
    }
    Rng rng(derive_key(seed, {fnv1a("init"), fnv1a(shape.name)}));
    const double limit = std::sqrt(6.0 / (shape.rows + shape.cols));
    for (auto& v : t.data) v = static_cast<S>(rng.uniform(-limit, limit));
  }
  if (pretrained) {
    auto& emb = store.get("embed.tokens");
    if (pretrained->rows() != emb.rows() || pretrained->cols() != emb.cols())
      throw std::runtime_error("init_params: pretrained embedding shape mismatch");
    for (int64_t i = 0; i < emb.size(); ++i) emb.data[i] = static_cast<S>(pretrained->data[i]);
  }
  return store;
}

template <class S>
ParamStore<S> zeros_like(const ParamStore<S>& other) {
  ParamStore<S> store;
  for (const auto& name : other.names()) {
    const auto& t = other.get(name);
    store.add(name, t.rows(), t.cols());
  }
  return store;
}

uint64_t DropoutCtx::key(std::string_view layer, uint64_t instance) const {
  return derive_key(run_seed, {fnv1a(layer), step, instance});
}

template <class S>
typename numeric::Tape<S>::Var ParamBank<S>::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  auto var = tape_.param(&store_.get(name));
  bound_.emplace(name, var);
  return var;
}

template <class S>
typename numeric::Tape<S>::Var apply_ffnn(ParamBank<S>& bank, const std::string& prefix,
                                          typename numeric::Tape<S>::Var x, int hidden_layers,
                                          double dropout_rate, const DropoutCtx& ctx,
                                          uint64_t instance) {
  auto& tape = bank.tape();
  auto cur = x;
  for (int layer = 0; layer < hidden_layers; ++layer) {
    std::string idx = std::to_string(layer);
    cur = tape.relu(
        tape.add_rowvec(tape.matmul(cur, bank(prefix + ".w" + idx)), bank(prefix + ".b" + idx)));
    cur = tape.dropout(cur, dropout_rate, ctx.train,
                       ctx.key(prefix + ".drop" + idx, instance));
  }
  std::string idx = std::to_string(hidden_layers);
  return tape.add_rowvec(tape.matmul(cur, bank(prefix + ".w" + idx)), bank(prefix + ".b" + idx));
}

template class ParamStore<float>;
template class ParamStore<double>;
template class ParamBank<float>;
template class ParamBank<double>;
template ParamStore<float> init_params<float>(const Config&, int, uint64_t,
                                              const numeric::Tensor<float>*);
template ParamStore<double> init_params<double>(const Config&, int, uint64_t,
                                                const numeric::Tensor<float>*);
template ParamStore<float> zeros_like<float>(const ParamStore<float>&);
template ParamStore<double> zeros_like<double>(const ParamStore<double>&);
template typename numeric::Tape<float>::Var apply_ffnn<float>(ParamBank<float>&,
                                                              const std::string&,
                                                              typename numeric::Tape<float>::Var,
                                                              int, double, const DropoutCtx&,
                                                              uint64_t);
template typename numeric::Tape<double>::Var apply_ffnn<double>(ParamBank<double>&,
                                                                const std::string&,
                                                                typename numeric::Tape<double>::Var,
                                                                int, double, const DropoutCtx&,
                                                                uint64_t);

}  // namespace dygie::model
