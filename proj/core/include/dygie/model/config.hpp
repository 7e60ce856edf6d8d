#pragma once

// Run configuration. One JSON document drives everything; command-line
// overrides address keys with dotted paths (e.g. graph.N=0) and must name
// keys that already exist.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dygie/corpus/synthetic.hpp"
#include "dygie/corpus/types.hpp"

namespace dygie::model {

enum class Precision { kFloat32, kFloat64 };
enum class Order { kCorefFirst, kRelFirst };

std::string to_string(Precision p);
std::string to_string(Order o);

struct NetSettings {
  int embedding_dim = 50;
  int hidden = 200;       // BiLSTM hidden size per direction
  int ffnn_hidden = 150;  // all scoring FFNNs use two hidden layers this wide
  int attn_hidden = 150;  // headword attention scorer hidden layer
  int width_dim = 20;
  int max_span_width = 8;  // L
  double dropout_input = 0.5;
  double dropout_lstm = 0.4;  // variational, one mask per sequence
  double dropout_ffnn = 0.4;
  std::string embeddings_path;  // optional pretrained vector file
};

struct GraphSettings {
  int N = 2;   // coreference propagation iterations
  int M = 2;   // relation propagation iterations
  int K = 10;  // max antecedents
  double coref_ratio = 0.3;  // beam spans per document token
  double rel_ratio = 0.4;    // beam spans per sentence token
  Order order = Order::kCorefFirst;
  // When set, pairwise scores omit the added unary terms.
  bool paper_exact_scores = false;
};

struct TaskWeights {
  double lambda_E = 1.0;
  double lambda_R = 1.0;
  double lambda_C = 1.0;
};

struct TrainSettings {
  int epochs = 300;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  uint64_t seed = 1;
  int eval_every = 10;
  bool shuffle = true;
};

struct SyntheticSettings {
  corpus::GenConfig gen;  // schema comes from the top-level schema section
  uint64_t seed = 7;
  double split[3] = {0.8, 0.1, 0.1};
};

struct Config {
  Precision precision = Precision::kFloat32;
  NetSettings net;
  GraphSettings graph;
  TaskWeights loss;
  corpus::LabelSchema schema;
  TrainSettings train;
  SyntheticSettings synthetic;

  int token_dim() const { return 2 * net.hidden; }
  int span_dim() const { return 3 * token_dim() + net.width_dim; }
  int relation_label_count() const { return schema.relation_count(); }

  void validate() const;

  static Config from_json_text(const std::string& text);
  std::string to_json_text(int indent = 2) const;

  // Reads the file, applies dotted-path overrides, validates.
  static Config load(const std::string& path, const std::vector<std::string>& overrides = {});
  static Config from_json_text_with_overrides(const std::string& text,
                                              const std::vector<std::string>& overrides);
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dygie::model
