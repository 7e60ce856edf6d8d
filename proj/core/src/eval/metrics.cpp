#include "dygie/eval/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dygie/corpus/corpus.hpp"

namespace dygie::eval {

using json = nlohmann::ordered_json;

ScoreReport make_report(int64_t tp, int64_t predicted, int64_t gold) {
  ScoreReport r;
  r.tp = tp;
  r.predicted = predicted;
  r.gold = gold;
  r.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / predicted;
  r.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / gold;
  r.f1 = (r.precision + r.recall) == 0.0 ? 0.0
                                         : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

namespace {

using EntityKey = std::tuple<std::string, int, int, std::string>;
using RelationKey = std::tuple<std::string, int, int, int, int, std::string>;

const corpus::Document& doc_for(const std::vector<corpus::Document>& gold,
                                const std::string& doc_id) {
  for (const auto& d : gold)
    if (d.doc_id == doc_id) return d;
  throw EvalError("predictions reference unknown doc_id \"" + doc_id + "\"");
}

template <class Key>
ScoreReport set_score(const std::set<Key>& pred, const std::set<Key>& gold) {
  int64_t tp = 0;
  for (const auto& k : pred)
    if (gold.count(k)) ++tp;
  return make_report(tp, static_cast<int64_t>(pred.size()), static_cast<int64_t>(gold.size()));
}

bool label_of(const EntityKey& k, const std::string& label) { return std::get<3>(k) == label; }
bool label_of(const RelationKey& k, const std::string& label) { return std::get<5>(k) == label; }

template <class Key>
void add_per_label(ScoreReport& report, const std::set<Key>& pred, const std::set<Key>& gold) {
  std::set<std::string> labels;
  for (const auto& k : pred) labels.insert(std::get<std::tuple_size_v<Key> - 1>(k));
  for (const auto& k : gold) labels.insert(std::get<std::tuple_size_v<Key> - 1>(k));
  for (const auto& label : labels) {
    std::set<Key> p, g;
    for (const auto& k : pred)
      if (label_of(k, label)) p.insert(k);
    for (const auto& k : gold)
      if (label_of(k, label)) g.insert(k);
    report.per_label.emplace(label, set_score(p, g));
  }
}

}  // namespace

ScoreReport score_entities(const std::vector<PredictedDoc>& pred,
                           const std::vector<corpus::Document>& gold, MatchMode mode,
                           bool per_label) {
  std::set<EntityKey> pred_set, gold_set;
  for (const auto& d : gold) {
    for (const auto& e : d.entities) {
      if (mode == MatchMode::kHead) {
        if (!e.head)
          throw EvalError(d.doc_id + ": head-match scoring requires head annotations");
        gold_set.insert({d.doc_id, e.head->start, e.head->end, e.label});
      } else {
        gold_set.insert({d.doc_id, e.span.start, e.span.end, e.label});
      }
    }
  }
  for (const auto& p : pred) {
    doc_for(gold, p.doc_id);
    for (const auto& [span, label] : p.entities)
      pred_set.insert({p.doc_id, span.start, span.end, label});
  }
  auto report = set_score(pred_set, gold_set);
  if (per_label) add_per_label(report, pred_set, gold_set);
  return report;
}

ScoreReport score_relations(const std::vector<PredictedDoc>& pred,
                            const std::vector<corpus::Document>& gold, bool per_label) {
  std::set<RelationKey> pred_set, gold_set;
  for (const auto& d : gold)
    for (const auto& r : d.relations)
      gold_set.insert({d.doc_id, r.arg1.start, r.arg1.end, r.arg2.start, r.arg2.end, r.label});
  for (const auto& p : pred) {
    doc_for(gold, p.doc_id);
    for (const auto& [a, b, label] : p.relations)
      pred_set.insert({p.doc_id, a.start, a.end, b.start, b.end, label});
  }
  auto report = set_score(pred_set, gold_set);
  if (per_label) add_per_label(report, pred_set, gold_set);
  return report;
}

AntecedentAccuracy antecedent_accuracy(const std::vector<PredictedDoc>& pred,
                                       const std::vector<corpus::Document>& gold) {
  AntecedentAccuracy acc;
  for (const auto& p : pred) {
    const auto& doc = doc_for(gold, p.doc_id);
    for (const auto& [span, antecedent] : p.antecedents) {
      const std::vector<corpus::Span>* cluster = nullptr;
      for (const auto& c : doc.clusters)
        for (const auto& sp : c)
          if (sp == span) cluster = &c;
      bool correct;
      if (antecedent.has_value()) {
        correct = false;
        if (cluster)
          for (const auto& sp : *cluster)
            if (sp == *antecedent) correct = true;
      } else {
        bool earlier_mate = false;
        if (cluster)
          for (const auto& sp : *cluster)
            if (sp < span) earlier_mate = true;
        correct = !earlier_mate;
      }
      acc.total += 1;
      acc.correct += correct ? 1 : 0;
    }
  }
  return acc;
}

std::vector<Bucket> parse_buckets(const std::string& spec) {
  std::vector<Bucket> buckets;
  std::istringstream is(spec);
  std::string part;
  while (std::getline(is, part, ',')) {
    if (part.empty()) continue;
    Bucket b;
    b.label = part;
    if (part.back() == '+') {
      b.lo = std::stoi(part.substr(0, part.size() - 1));
      b.hi = INT_MAX;
    } else if (auto dash = part.find('-'); dash != std::string::npos) {
      b.lo = std::stoi(part.substr(0, dash));
      b.hi = std::stoi(part.substr(dash + 1));
    } else {
      b.lo = b.hi = std::stoi(part);
    }
    if (b.lo > b.hi) throw EvalError("bucket \"" + part + "\" has lo > hi");
    buckets.push_back(std::move(b));
  }
  for (size_t i = 0; i < buckets.size(); ++i)
    for (size_t j = i + 1; j < buckets.size(); ++j)
      if (buckets[i].lo <= buckets[j].hi && buckets[j].lo <= buckets[i].hi)
        throw EvalError("buckets \"" + buckets[i].label + "\" and \"" + buckets[j].label +
                        "\" overlap");
  return buckets;
}

std::vector<Bucket> default_buckets() { return parse_buckets("2,3,4-5,6-11,12+"); }

std::vector<BucketReport> breakdown_by_entity_count(const std::vector<PredictedDoc>& pred,
                                                    const std::vector<corpus::Document>& gold,
                                                    const std::vector<Bucket>& buckets) {
  // bucket index per (doc, sentence), by gold entity count
  std::map<std::pair<std::string, int>, int> sentence_bucket;
  std::vector<BucketReport> out(buckets.size());
  for (size_t b = 0; b < buckets.size(); ++b) out[b].bucket = buckets[b];

  for (const auto& d : gold) {
    for (int s = 0; s < d.sentence_count(); ++s) {
      int count = 0;
      for (const auto& e : d.entities)
        if (e.span.sentence == s) ++count;
      for (size_t b = 0; b < buckets.size(); ++b)
        if (count >= buckets[b].lo && count <= buckets[b].hi) {
          sentence_bucket[{d.doc_id, s}] = static_cast<int>(b);
          out[b].sentences += 1;
          break;
        }
    }
  }

  std::vector<std::set<RelationKey>> pred_sets(buckets.size()), gold_sets(buckets.size());
  for (const auto& d : gold)
    for (const auto& r : d.relations) {
      auto it = sentence_bucket.find({d.doc_id, r.arg1.sentence});
      if (it == sentence_bucket.end()) continue;
      gold_sets[it->second].insert(
          {d.doc_id, r.arg1.start, r.arg1.end, r.arg2.start, r.arg2.end, r.label});
    }
  for (const auto& p : pred) {
    const auto& doc = doc_for(gold, p.doc_id);
    for (const auto& [a, b, label] : p.relations) {
      int sentence = doc.sentence_of(a.start);
      auto it = sentence_bucket.find({p.doc_id, sentence});
      if (it == sentence_bucket.end()) continue;
      pred_sets[it->second].insert({p.doc_id, a.start, a.end, b.start, b.end, label});
    }
  }
  for (size_t b = 0; b < buckets.size(); ++b)
    out[b].report = set_score(pred_sets[b], gold_sets[b]);
  return out;
}

const std::vector<std::string>& default_pronoun_lexicon() {
  static const std::vector<std::string> lexicon{
      "anyone", "everyone", "it",    "itself",     "one",  "our", "ours", "their",
      "theirs", "them",     "themselves", "they", "us",  "we",   "who"};
  return lexicon;
}

ScoreReport pronoun_subset_report(const std::vector<PredictedDoc>& pred,
                                  const std::vector<corpus::Document>& gold,
                                  const std::vector<std::string>& lexicon) {
  std::set<std::string> words(lexicon.begin(), lexicon.end());
  auto is_pronoun = [&](const corpus::Document& doc, const corpus::Span& span) {
    if (span.width() != 1) return false;
    return words.count(doc.span_text(span)) > 0;
  };
  std::set<EntityKey> pred_set, gold_set;
  for (const auto& d : gold)
    for (const auto& e : d.entities)
      if (is_pronoun(d, e.span)) gold_set.insert({d.doc_id, e.span.start, e.span.end, e.label});
  for (const auto& p : pred) {
    const auto& doc = doc_for(gold, p.doc_id);
    for (const auto& [span, label] : p.entities)
      if (is_pronoun(doc, span)) pred_set.insert({p.doc_id, span.start, span.end, label});
  }
  return set_score(pred_set, gold_set);
}

ConfusionDelta confusion_delta(const std::vector<PredictedDoc>& pred_a,
                               const std::vector<PredictedDoc>& pred_b,
                               const std::vector<corpus::Document>& gold,
                               const std::vector<std::string>& entity_labels) {
  const int n = static_cast<int>(entity_labels.size());
  auto label_index = [&](const std::string& label) {
    for (int i = 0; i < n; ++i)
      if (entity_labels[i] == label) return i;
    return -1;
  };
  auto matrix = [&](const std::vector<PredictedDoc>& preds) {
    std::vector<std::vector<int64_t>> m(n, std::vector<int64_t>(n, 0));
    std::map<std::string, std::map<std::pair<int, int>, std::string>> by_doc;
    for (const auto& p : preds)
      for (const auto& [span, label] : p.entities)
        by_doc[p.doc_id].emplace(std::make_pair(span.start, span.end), label);
    for (const auto& d : gold) {
      auto it = by_doc.find(d.doc_id);
      for (const auto& e : d.entities) {
        int g = label_index(e.label);
        if (g < 0 || it == by_doc.end()) continue;
        auto hit = it->second.find({e.span.start, e.span.end});
        if (hit == it->second.end()) continue;  // predicted null: not a confusion
        int p = label_index(hit->second);
        if (p >= 0) m[g][p] += 1;
      }
    }
    return m;
  };
  ConfusionDelta out;
  out.labels = entity_labels;
  auto a = matrix(pred_a), b = matrix(pred_b);
  out.delta.assign(n, std::vector<int64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.delta[i][j] = a[i][j] - b[i][j];
  return out;
}

// -- rendering --------------------------------------------------------

namespace {
json report_to_json(const ScoreReport& r) {
  json j{{"precision", r.precision}, {"recall", r.recall},       {"f1", r.f1},
         {"tp", r.tp},               {"predicted", r.predicted}, {"gold", r.gold}};
  if (!r.per_label.empty()) {
    json labels;
    for (const auto& [label, sub] : r.per_label) labels[label] = report_to_json(sub);
    j["per_label"] = std::move(labels);
  }
  return j;
}
}  // namespace

std::string report_json(const ScoreReport& report) { return report_to_json(report).dump(); }

std::string report_table(const std::string& title, const ScoreReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s %9s %9s %9s %8s %8s %8s\n", title.c_str(), "P", "R", "F1",
                "tp", "pred", "gold");
  std::string out = buf;
  auto line = [&](const std::string& name, const ScoreReport& r) {
    std::snprintf(buf, sizeof(buf), "%-24s %9.4f %9.4f %9.4f %8lld %8lld %8lld\n", name.c_str(),
                  r.precision, r.recall, r.f1, static_cast<long long>(r.tp),
                  static_cast<long long>(r.predicted), static_cast<long long>(r.gold));
    out += buf;
  };
  line("  overall", report);
  for (const auto& [label, sub] : report.per_label) line("  " + label, sub);
  return out;
}

std::string buckets_table(const std::vector<BucketReport>& reports) {
  std::string out = "entities/sentence        P         R        F1    sents     tp   pred   gold\n";
  char buf[256];
  for (const auto& b : reports) {
    std::snprintf(buf, sizeof(buf), "%-16s %9.4f %9.4f %9.4f %8lld %6lld %6lld %6lld%s\n",
                  b.bucket.label.c_str(), b.report.precision, b.report.recall, b.report.f1,
                  static_cast<long long>(b.sentences), static_cast<long long>(b.report.tp),
                  static_cast<long long>(b.report.predicted),
                  static_cast<long long>(b.report.gold), b.empty() ? "  (empty)" : "");
    out += buf;
  }
  return out;
}

std::string confusion_table(const ConfusionDelta& delta) {
  std::ostringstream os;
  os << "gold\\pred";
  for (const auto& l : delta.labels) os << "\t" << l;
  os << "\n";
  for (size_t i = 0; i < delta.labels.size(); ++i) {
    os << delta.labels[i];
    for (size_t j = 0; j < delta.labels.size(); ++j) os << "\t" << delta.delta[i][j];
    os << "\n";
  }
  return os.str();
}

// -- predictions file -------------------------------------------------

void save_predictions(const std::vector<PredictedDoc>& preds,
                      const std::vector<corpus::Document>& docs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw EvalError("cannot write predictions file: " + path);
  for (const auto& p : preds) {
    const auto& doc = doc_for(docs, p.doc_id);
    corpus::Document shell;
    shell.doc_id = p.doc_id;
    shell.sentences = doc.sentences;
    shell.finalize();
    for (const auto& [span, label] : p.entities) shell.entities.push_back({span, label, {}});
    for (const auto& [a, b, label] : p.relations) shell.relations.push_back({a, b, label});
    json j = json::parse(corpus::serialize_document(shell));
    json ants = json::array();
    for (const auto& [span, antecedent] : p.antecedents) {
      json entry = json::array();
      entry.push_back({span.start, span.end});
      if (antecedent.has_value())
        entry.push_back({antecedent->start, antecedent->end});
      else
        entry.push_back(nullptr);
      ants.push_back(std::move(entry));
    }
    j["antecedents"] = std::move(ants);
    out << j.dump() << "\n";
  }
}

std::vector<PredictedDoc> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open predictions file: " + path);
  std::vector<PredictedDoc> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto doc = corpus::parse_document(line);
      PredictedDoc p;
      p.doc_id = doc.doc_id;
      for (const auto& e : doc.entities) p.entities.emplace_back(e.span, e.label);
      for (const auto& r : doc.relations) p.relations.emplace_back(r.arg1, r.arg2, r.label);
      json j = json::parse(line);
      if (j.contains("antecedents")) {
        for (const auto& entry : j.at("antecedents")) {
          corpus::Span span{doc.sentence_of(entry[0][0].get<int>()), entry[0][0].get<int>(),
                            entry[0][1].get<int>()};
          std::optional<corpus::Span> antecedent;
          if (!entry[1].is_null())
            antecedent = corpus::Span{doc.sentence_of(entry[1][0].get<int>()),
                                      entry[1][0].get<int>(), entry[1][1].get<int>()};
          p.antecedents.emplace_back(span, antecedent);
        }
      }
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw EvalError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dygie::eval
