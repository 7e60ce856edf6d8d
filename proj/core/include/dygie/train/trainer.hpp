#pragma once

// Optimization loop: one document per Adam step, deterministic seeded
// shuffling, periodic dev evaluation, best-checkpoint selection.

#include <optional>
#include <ostream>

#include "dygie/eval/metrics.hpp"
#include "dygie/model/model.hpp"
#include "dygie/train/checkpoint.hpp"

namespace dygie::train {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DevMetrics {
  double entity_f1 = 0.0;
  double relation_f1 = 0.0;
  double antecedent_accuracy = 0.0;
  double selection() const { return (entity_f1 + relation_f1) / 2.0; }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per document
  int dropped_gold_relations = 0;
  std::optional<DevMetrics> dev;
};

struct TrainResult {
  Checkpoint best;
  int best_epoch = 0;
  std::vector<EpochRecord> log;
};

// `metrics_out`, when given, receives one JSON line per epoch.
template <class S>
TrainResult train(const model::Config& config, const std::vector<corpus::Document>& train_docs,
                  const std::vector<corpus::Document>& dev_docs,
                  std::ostream* metrics_out = nullptr);

// Dispatches on config.precision.
TrainResult train_dispatch(const model::Config& config,
                           const std::vector<corpus::Document>& train_docs,
                           const std::vector<corpus::Document>& dev_docs,
                           std::ostream* metrics_out = nullptr);

// Decode a corpus with checkpoint parameters (dispatches on the checkpoint's
// recorded precision).
std::vector<PredictedDoc> predict_corpus(const Checkpoint& ckpt,
                                         const std::vector<corpus::Document>& docs);

DevMetrics evaluate_dev(const std::vector<PredictedDoc>& preds,
                        const std::vector<corpus::Document>& docs);

std::string epoch_json(const EpochRecord& record);

}  // namespace dygie::train
