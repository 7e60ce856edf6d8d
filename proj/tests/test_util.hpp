#pragma once

// Shared fixtures: a tiny model configuration that keeps tapes small, plus
// scalar re-implementations used as independent oracles.

#include <map>
#include <string>
#include <vector>

#include "dygie/model/model.hpp"
#include "dygie/rng.hpp"

namespace testutil {

inline dygie::model::Config tiny_config(int entity_labels = 3, int relation_labels = 2) {
  dygie::model::Config cfg;
  cfg.precision = dygie::model::Precision::kFloat64;
  cfg.net.embedding_dim = 5;
  cfg.net.hidden = 3;
  cfg.net.ffnn_hidden = 4;
  cfg.net.attn_hidden = 4;
  cfg.net.width_dim = 2;
  cfg.net.max_span_width = 3;
  cfg.net.dropout_input = 0.5;
  cfg.net.dropout_lstm = 0.4;
  cfg.net.dropout_ffnn = 0.4;
  cfg.graph.N = 1;
  cfg.graph.M = 1;
  cfg.graph.K = 3;
  cfg.graph.coref_ratio = 0.4;
  cfg.graph.rel_ratio = 0.5;
  for (int i = 0; i < entity_labels; ++i) cfg.schema.entity_labels.push_back("T" + std::to_string(i));
  for (int i = 0; i < relation_labels; ++i)
    cfg.schema.relation_labels.push_back("R" + std::to_string(i));
  cfg.synthetic.gen.schema = cfg.schema;
  return cfg;
}

template <class S>
void randomize_store(dygie::model::ParamStore<S>& store, uint64_t seed, double scale = 0.3) {
  dygie::Rng rng(seed);
  for (const auto& name : store.names())
    for (auto& v : store.get(name).data) v = static_cast<S>(rng.uniform(-scale, scale));
}

template <class S>
void zero_store(dygie::model::ParamStore<S>& store) {
  for (const auto& name : store.names())
    for (auto& v : store.get(name).data) v = S(0);
}

// Scalar re-computation of the two-hidden-layer relu FFNN used everywhere.
inline std::vector<double> ffnn_oracle(const dygie::model::ParamStore<double>& params,
                                       const std::string& prefix, std::vector<double> x) {
  auto layer = [&](const std::vector<double>& in, const std::string& w_name,
                   const std::string& b_name, bool relu) {
    const auto& w = params.get(w_name);
    const auto& b = params.get(b_name);
    std::vector<double> out(w.cols(), 0.0);
    for (int c = 0; c < w.cols(); ++c) {
      double acc = b.at(0, c);
      for (int r = 0; r < w.rows(); ++r) acc += in[r] * w.at(r, c);
      out[c] = relu && acc < 0 ? 0.0 : acc;
    }
    return out;
  };
  auto h0 = layer(x, prefix + ".w0", prefix + ".b0", true);
  auto h1 = layer(h0, prefix + ".w1", prefix + ".b1", true);
  return layer(h1, prefix + ".w2", prefix + ".b2", false);
}

inline std::vector<double> softmax_oracle(std::vector<double> v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double z = 0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    z += x;
  }
  for (auto& x : v) x /= z;
  return v;
}

// A small hand-written document: two sentences, one entity pair + relation
// each, one cross-sentence cluster.
inline dygie::corpus::Document small_doc() {
  dygie::corpus::Document doc;
  doc.doc_id = "toy";
  doc.sentences = {{"a", "b", "c", "d", "e"}, {"f", "g", "h", "i"}};
  doc.finalize();
  doc.entities.push_back({{0, 1, 1}, "T0", std::nullopt});
  doc.entities.push_back({{0, 2, 3}, "T1", std::nullopt});
  doc.entities.push_back({{1, 5, 5}, "T2", std::nullopt});
  doc.entities.push_back({{1, 7, 7}, "T0", std::nullopt});
  doc.relations.push_back({{0, 1, 1}, {0, 2, 3}, "R0"});
  doc.relations.push_back({{1, 5, 5}, {1, 7, 7}, "R1"});
  doc.clusters.push_back({{0, 1, 1}, {1, 7, 7}});
  return doc;
}

}  // namespace testutil
