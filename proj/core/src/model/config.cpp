#include "dygie/model/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dygie::model {

using json = nlohmann::ordered_json;

std::string to_string(Precision p) { return p == Precision::kFloat32 ? "float32" : "float64"; }
std::string to_string(Order o) { return o == Order::kCorefFirst ? "coref_first" : "rel_first"; }

namespace {

Precision precision_from(const std::string& s) {
  if (s == "float32") return Precision::kFloat32;
  if (s == "float64") return Precision::kFloat64;
  throw ConfigError("precision must be float32 or float64, got \"" + s + "\"");
}

Order order_from(const std::string& s) {
  if (s == "coref_first") return Order::kCorefFirst;
  if (s == "rel_first") return Order::kRelFirst;
  throw ConfigError("graph.order must be coref_first or rel_first, got \"" + s + "\"");
}

json to_json(const Config& c) {
  json j;
  j["precision"] = to_string(c.precision);
  j["model"] = {{"embedding_dim", c.net.embedding_dim},
                {"hidden", c.net.hidden},
                {"ffnn_hidden", c.net.ffnn_hidden},
                {"attn_hidden", c.net.attn_hidden},
                {"width_dim", c.net.width_dim},
                {"max_span_width", c.net.max_span_width},
                {"dropout_input", c.net.dropout_input},
                {"dropout_lstm", c.net.dropout_lstm},
                {"dropout_ffnn", c.net.dropout_ffnn},
                {"embeddings_path", c.net.embeddings_path}};
  j["graph"] = {{"N", c.graph.N},
                {"M", c.graph.M},
                {"K", c.graph.K},
                {"coref_ratio", c.graph.coref_ratio},
                {"rel_ratio", c.graph.rel_ratio},
                {"order", to_string(c.graph.order)},
                {"paper_exact_scores", c.graph.paper_exact_scores}};
  j["loss"] = {{"lambda_E", c.loss.lambda_E},
               {"lambda_R", c.loss.lambda_R},
               {"lambda_C", c.loss.lambda_C}};
  j["schema"] = {{"entity_labels", c.schema.entity_labels},
                 {"relation_labels", c.schema.relation_labels}};
  j["train"] = {{"epochs", c.train.epochs},
                {"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"adam_eps", c.train.adam_eps},
                {"clip_norm", c.train.clip_norm},
                {"seed", c.train.seed},
                {"eval_every", c.train.eval_every},
                {"shuffle", c.train.shuffle}};
  j["synthetic"] = {{"num_docs", c.synthetic.gen.num_docs},
                    {"sentences_per_doc", c.synthetic.gen.sentences_per_doc},
                    {"tokens_per_sentence", c.synthetic.gen.tokens_per_sentence},
                    {"nesting_rate", c.synthetic.gen.nesting_rate},
                    {"pronoun_rate", c.synthetic.gen.pronoun_rate},
                    {"seed", c.synthetic.seed},
                    {"split", {c.synthetic.split[0], c.synthetic.split[1], c.synthetic.split[2]}}};
  return j;
}

Config from_json(const json& j) {
  Config c;
  if (j.contains("precision")) c.precision = precision_from(j.at("precision").get<std::string>());
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.net.embedding_dim = m.value("embedding_dim", c.net.embedding_dim);
    c.net.hidden = m.value("hidden", c.net.hidden);
    c.net.ffnn_hidden = m.value("ffnn_hidden", c.net.ffnn_hidden);
    c.net.attn_hidden = m.value("attn_hidden", c.net.attn_hidden);
    c.net.width_dim = m.value("width_dim", c.net.width_dim);
    c.net.max_span_width = m.value("max_span_width", c.net.max_span_width);
    c.net.dropout_input = m.value("dropout_input", c.net.dropout_input);
    c.net.dropout_lstm = m.value("dropout_lstm", c.net.dropout_lstm);
    c.net.dropout_ffnn = m.value("dropout_ffnn", c.net.dropout_ffnn);
    c.net.embeddings_path = m.value("embeddings_path", c.net.embeddings_path);
  }
  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    c.graph.N = g.value("N", c.graph.N);
    c.graph.M = g.value("M", c.graph.M);
    c.graph.K = g.value("K", c.graph.K);
    c.graph.coref_ratio = g.value("coref_ratio", c.graph.coref_ratio);
    c.graph.rel_ratio = g.value("rel_ratio", c.graph.rel_ratio);
    if (g.contains("order")) c.graph.order = order_from(g.at("order").get<std::string>());
    c.graph.paper_exact_scores = g.value("paper_exact_scores", c.graph.paper_exact_scores);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    c.loss.lambda_E = l.value("lambda_E", c.loss.lambda_E);
    c.loss.lambda_R = l.value("lambda_R", c.loss.lambda_R);
    c.loss.lambda_C = l.value("lambda_C", c.loss.lambda_C);
  }
  if (j.contains("schema")) {
    const auto& s = j.at("schema");
    c.schema.entity_labels = s.value("entity_labels", std::vector<std::string>{});
    c.schema.relation_labels = s.value("relation_labels", std::vector<std::string>{});
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.beta1 = t.value("beta1", c.train.beta1);
    c.train.beta2 = t.value("beta2", c.train.beta2);
    c.train.adam_eps = t.value("adam_eps", c.train.adam_eps);
    c.train.clip_norm = t.value("clip_norm", c.train.clip_norm);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.eval_every = t.value("eval_every", c.train.eval_every);
    c.train.shuffle = t.value("shuffle", c.train.shuffle);
  }
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    c.synthetic.gen.num_docs = s.value("num_docs", c.synthetic.gen.num_docs);
    c.synthetic.gen.sentences_per_doc =
        s.value("sentences_per_doc", c.synthetic.gen.sentences_per_doc);
    c.synthetic.gen.tokens_per_sentence =
        s.value("tokens_per_sentence", c.synthetic.gen.tokens_per_sentence);
    c.synthetic.gen.nesting_rate = s.value("nesting_rate", c.synthetic.gen.nesting_rate);
    c.synthetic.gen.pronoun_rate = s.value("pronoun_rate", c.synthetic.gen.pronoun_rate);
    c.synthetic.seed = s.value("seed", c.synthetic.seed);
    if (s.contains("split")) {
      auto sp = s.at("split").get<std::vector<double>>();
      if (sp.size() != 3) throw ConfigError("synthetic.split must have three entries");
      for (int i = 0; i < 3; ++i) c.synthetic.split[i] = sp[i];
    }
  }
  c.synthetic.gen.schema = c.schema;
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key.path=value, got \"" + assignment + "\"");
  std::string path = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  json* node = &j;
  std::istringstream is(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(is, part, '.')) parts.push_back(part);
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i]))
      throw ConfigError("override path \"" + path + "\" does not exist in the config");
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() || !node->contains(parts.back()))
    throw ConfigError("override path \"" + path + "\" does not exist in the config");
  json& leaf = (*node)[parts.back()];
  try {
    if (leaf.is_string())
      leaf = value;
    else if (leaf.is_boolean())
      leaf = (value == "true" || value == "1");
    else if (leaf.is_number_integer() || leaf.is_number_unsigned())
      leaf = std::stoll(value);
    else if (leaf.is_number_float())
      leaf = std::stod(value);
    else
      throw ConfigError("override path \"" + path + "\" targets a non-scalar value");
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot parse override value \"" + value + "\" for " + path);
  }
}

}  // namespace

void Config::validate() const {
  if (net.embedding_dim < 1 || net.hidden < 1 || net.ffnn_hidden < 1 || net.attn_hidden < 1 ||
      net.width_dim < 1 || net.max_span_width < 1)
    throw ConfigError("model dimensions must be positive");
  if (graph.N < 0 || graph.M < 0) throw ConfigError("graph.N and graph.M must be >= 0");
  if (graph.K < 1) throw ConfigError("graph.K must be >= 1");
  if (graph.coref_ratio <= 0 || graph.coref_ratio > 1 || graph.rel_ratio <= 0 ||
      graph.rel_ratio > 1)
    throw ConfigError("beam ratios must lie in (0, 1]");
  if (loss.lambda_E < 0 || loss.lambda_R < 0 || loss.lambda_C < 0)
    throw ConfigError("task weights must be nonnegative");
  if (schema.entity_count() < 1) throw ConfigError("schema.entity_labels must be nonempty");
  if (schema.relation_count() < 1) throw ConfigError("schema.relation_labels must be nonempty");
  schema.validate();
  if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (train.learning_rate <= 0 && train.learning_rate != 0.0)
    throw ConfigError("train.learning_rate must be >= 0");
  if (train.clip_norm <= 0) throw ConfigError("train.clip_norm must be > 0");
  for (double r : {net.dropout_input, net.dropout_lstm, net.dropout_ffnn})
    if (r < 0 || r >= 1) throw ConfigError("dropout rates must lie in [0, 1)");
}

Config Config::from_json_text(const std::string& text) {
  return from_json_text_with_overrides(text, {});
}

Config Config::from_json_text_with_overrides(const std::string& text,
                                             const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  // Overrides must reference existing keys; resolve them against the fully
  // populated default document so every documented key is addressable.
  json defaults = to_json(from_json(j));
  for (const auto& o : overrides) apply_override(defaults, o);
  Config c = from_json(defaults);
  c.validate();
  return c;
}

Config Config::load(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text_with_overrides(ss.str(), overrides);
}

std::string Config::to_json_text(int indent) const { return to_json(*this).dump(indent); }

}  // namespace dygie::model
