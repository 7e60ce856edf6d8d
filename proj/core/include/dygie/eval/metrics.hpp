#pragma once

// Scoring and analysis: micro P/R/F1 for entities and relations, antecedent
// accuracy, and the diagnostic breakdowns (per-sentence entity-count
// buckets, pronoun subsets, confusion-matrix deltas).

#include <climits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dygie/corpus/types.hpp"
#include "dygie/predictions.hpp"

namespace dygie::eval {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t tp = 0;
  int64_t predicted = 0;
  int64_t gold = 0;
  std::map<std::string, ScoreReport> per_label;
};

// P = tp/predicted, R = tp/gold, F1 = 2PR/(P+R); all 0 when undefined.
ScoreReport make_report(int64_t tp, int64_t predicted, int64_t gold);

enum class MatchMode { kSpan, kHead };

// Micro-averaged over the corpus; duplicate predictions of one (span,
// label) count once. Head mode matches the predicted span against the gold
// head region and requires head annotations on every gold entity.
ScoreReport score_entities(const std::vector<PredictedDoc>& pred,
                           const std::vector<corpus::Document>& gold,
                           MatchMode mode = MatchMode::kSpan, bool per_label = false);

// Both argument spans and the label must match; pairs are ordered.
ScoreReport score_relations(const std::vector<PredictedDoc>& pred,
                            const std::vector<corpus::Document>& gold, bool per_label = false);

struct AntecedentAccuracy {
  int64_t correct = 0;
  int64_t total = 0;
  double fraction() const { return total == 0 ? 1.0 : static_cast<double>(correct) / total; }
};

// A choice is correct when it names a gold cluster-mate, or is epsilon for
// a span with no earlier gold cluster-mate.
AntecedentAccuracy antecedent_accuracy(const std::vector<PredictedDoc>& pred,
                                       const std::vector<corpus::Document>& gold);

struct Bucket {
  int lo = 0;
  int hi = INT_MAX;
  std::string label;
};

// "2,3,4-5,6-11,12+" -> disjoint integer ranges.
std::vector<Bucket> parse_buckets(const std::string& spec);
std::vector<Bucket> default_buckets();  // the 2,3,4-5,6-11,12+ axis

struct BucketReport {
  Bucket bucket;
  ScoreReport report;
  int64_t sentences = 0;
  bool empty() const { return sentences == 0; }
};

// Sentences are assigned by gold entity count; relation micro scores are
// computed within each bucket. Sentences outside every bucket are skipped.
std::vector<BucketReport> breakdown_by_entity_count(const std::vector<PredictedDoc>& pred,
                                                    const std::vector<corpus::Document>& gold,
                                                    const std::vector<Bucket>& buckets);

const std::vector<std::string>& default_pronoun_lexicon();  // 15 pronouns

// Entity scoring restricted to single-token spans whose lowercased text is
// in the lexicon (applied to gold and predicted sides alike).
ScoreReport pronoun_subset_report(const std::vector<PredictedDoc>& pred,
                                  const std::vector<corpus::Document>& gold,
                                  const std::vector<std::string>& lexicon);

struct ConfusionDelta {
  std::vector<std::string> labels;
  std::vector<std::vector<int64_t>> delta;  // [gold][predicted], A minus B
};

// Confusion counts over gold entity spans only: a cell (g, p) counts gold
// spans of label g that received the non-null prediction p on exactly that
// span. Unpredicted gold spans contribute nothing.
ConfusionDelta confusion_delta(const std::vector<PredictedDoc>& pred_a,
                               const std::vector<PredictedDoc>& pred_b,
                               const std::vector<corpus::Document>& gold,
                               const std::vector<std::string>& entity_labels);

// -- rendering --------------------------------------------------------
std::string report_json(const ScoreReport& report);
std::string report_table(const std::string& title, const ScoreReport& report);
std::string buckets_table(const std::vector<BucketReport>& reports);
std::string confusion_table(const ConfusionDelta& delta);

// -- predictions file -------------------------------------------------
// Corpus format plus an "antecedents" key:
//   [[[s, e], [as, ae]], [[s, e], null], ...]
void save_predictions(const std::vector<PredictedDoc>& preds,
                      const std::vector<corpus::Document>& docs, const std::string& path);
std::vector<PredictedDoc> load_predictions(const std::string& path);

}  // namespace dygie::eval
