#include "dygie/train/trainer.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dygie/corpus/corpus.hpp"
#include "dygie/rng.hpp"

namespace dygie::train {

using json = nlohmann::ordered_json;

DevMetrics evaluate_dev(const std::vector<PredictedDoc>& preds,
                        const std::vector<corpus::Document>& docs) {
  DevMetrics m;
  m.entity_f1 = eval::score_entities(preds, docs).f1;
  m.relation_f1 = eval::score_relations(preds, docs).f1;
  m.antecedent_accuracy = eval::antecedent_accuracy(preds, docs).fraction();
  return m;
}

std::string epoch_json(const EpochRecord& record) {
  json j;
  j["epoch"] = record.epoch;
  j["train_loss"] = record.train_loss;
  j["dropped_gold_relations"] = record.dropped_gold_relations;
  if (record.dev) {
    j["dev"] = {{"entity_f1", record.dev->entity_f1},
                {"relation_f1", record.dev->relation_f1},
                {"antecedent_accuracy", record.dev->antecedent_accuracy}};
  }
  return j.dump();
}

namespace {

template <class S>
std::string param_norms(const model::ParamStore<S>& params) {
  std::ostringstream os;
  for (const auto& name : params.names()) {
    double sq = 0;
    for (S v : params.get(name).data) sq += static_cast<double>(v) * static_cast<double>(v);
    os << "\n  " << name << " norm=" << std::sqrt(sq);
  }
  return os.str();
}

}  // namespace

template <class S>
TrainResult train(const model::Config& config, const std::vector<corpus::Document>& train_docs,
                  const std::vector<corpus::Document>& dev_docs, std::ostream* metrics_out) {
  config.validate();
  if (train_docs.empty()) throw TrainError("training corpus is empty");
  for (const auto& doc : train_docs) corpus::validate_document(doc, config.schema);
  for (const auto& doc : dev_docs) corpus::validate_document(doc, config.schema);

  corpus::EmbeddingTable vocab =
      config.net.embeddings_path.empty()
          ? corpus::build_vocabulary(train_docs, config.net.embedding_dim)
          : corpus::load_embeddings(config.net.embeddings_path, config.net.embedding_dim);
  auto params = model::init_params<S>(
      config, vocab.row_count(), config.train.seed,
      config.net.embeddings_path.empty() ? nullptr : &vocab.vectors);
  Adam<S> adam(params);
  model::Model<S> model(&config, &vocab, &params);
  Rng shuffle_rng(derive_key(config.train.seed, {fnv1a("shuffle")}));

  TrainResult result;
  double best_selection = -1.0;
  uint64_t step = 0;

  auto snapshot = [&]() {
    return make_checkpoint(config, vocab.tokens, params, adam, shuffle_rng.state());
  };

  std::vector<int> order(train_docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= config.train.epochs; ++epoch) {
    if (config.train.shuffle) {
      for (size_t i = order.size() - 1; i > 0; --i) {
        int j = shuffle_rng.below(static_cast<int>(i) + 1);
        std::swap(order[i], order[j]);
      }
    }
    double loss_sum = 0.0;
    int dropped = 0;
    for (int idx : order) {
      const auto& doc = train_docs[idx];
      numeric::Tape<S> tape;
      auto fwd = model.forward(tape, doc, /*train=*/true, /*with_loss=*/true, step);
      const double loss = static_cast<double>(tape.value(fwd.loss.total).data[0]);
      if (!std::isfinite(loss))
        throw TrainError("non-finite loss at epoch " + std::to_string(epoch) + ", document " +
                         doc.doc_id + "; parameter norms:" + param_norms(params));
      loss_sum += loss;
      dropped += fwd.loss.dropped_gold_relations;
      tape.backward(fwd.loss.total);
      std::map<std::string, const numeric::Tensor<S>*> grads;
      for (const auto& [name, var] : fwd.bound_params) {
        const auto& g = tape.grad(var);
        if (!g.data.empty()) grads.emplace(name, &g);
      }
      adam.apply(params, grads, config.train);
      ++step;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_docs.size());
    record.dropped_gold_relations = dropped;

    const bool eval_now = !dev_docs.empty() && (epoch % std::max(1, config.train.eval_every) == 0 ||
                                                epoch == config.train.epochs);
    if (eval_now) {
      std::vector<PredictedDoc> preds;
      for (const auto& doc : dev_docs) preds.push_back(model.predict(doc));
      record.dev = evaluate_dev(preds, dev_docs);
      if (record.dev->selection() > best_selection) {
        best_selection = record.dev->selection();
        result.best = snapshot();
        result.best_epoch = epoch;
      }
    }
    if (metrics_out) (*metrics_out) << epoch_json(record) << "\n";
    result.log.push_back(std::move(record));
  }

  if (result.best_epoch == 0) {  // no dev evaluation happened
    result.best = snapshot();
    result.best_epoch = config.train.epochs;
  }
  return result;
}

TrainResult train_dispatch(const model::Config& config,
                           const std::vector<corpus::Document>& train_docs,
                           const std::vector<corpus::Document>& dev_docs,
                           std::ostream* metrics_out) {
  if (config.precision == model::Precision::kFloat64)
    return train<double>(config, train_docs, dev_docs, metrics_out);
  return train<float>(config, train_docs, dev_docs, metrics_out);
}

namespace {

template <class S>
std::vector<PredictedDoc> predict_with(const Checkpoint& ckpt,
                                       const std::vector<corpus::Document>& docs) {
  auto vocab = corpus::table_from_tokens(ckpt.vocab, ckpt.config.net.embedding_dim);
  auto params = model::init_params<S>(ckpt.config, vocab.row_count(), ckpt.config.train.seed);
  Adam<S> adam(params);
  restore_checkpoint(ckpt, &params, &adam);
  model::Model<S> model(&ckpt.config, &vocab, &params);
  std::vector<PredictedDoc> out;
  for (const auto& doc : docs) out.push_back(model.predict(doc));
  return out;
}

}  // namespace

std::vector<PredictedDoc> predict_corpus(const Checkpoint& ckpt,
                                         const std::vector<corpus::Document>& docs) {
  if (ckpt.config.precision == model::Precision::kFloat64) return predict_with<double>(ckpt, docs);
  return predict_with<float>(ckpt, docs);
}

template TrainResult train<float>(const model::Config&, const std::vector<corpus::Document>&,
                                  const std::vector<corpus::Document>&, std::ostream*);
template TrainResult train<double>(const model::Config&, const std::vector<corpus::Document>&,
                                   const std::vector<corpus::Document>&, std::ostream*);

}  // namespace dygie::train
