// Command-line driver: gen-data, train, eval, predict, gradcheck, ablate.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dygie/corpus/corpus.hpp"
#include "dygie/eval/metrics.hpp"
#include "dygie/model/model.hpp"
#include "dygie/train/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dygie;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

model::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  try {
    return model::Config::load(path, overrides);
  } catch (const model::ConfigError& e) {
    throw UsageError(e.what());
  }
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
}

// ---------------------------------------------------------------- gen-data

void split_counts(int n, const double split[3], int* n_train, int* n_dev) {
  *n_train = static_cast<int>(std::llround(split[0] * n));
  *n_dev = static_cast<int>(std::llround(split[1] * n));
  if (*n_train + *n_dev > n) *n_dev = n - *n_train;
}

int cmd_gen_data(const std::string& config_path, const std::string& manifest_path,
                 const std::vector<std::string>& overrides, const std::string& out_dir) {
  model::Config cfg;
  if (!manifest_path.empty()) {
    std::ifstream in(manifest_path);
    if (!in) throw UsageError("cannot open manifest: " + manifest_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    json manifest = json::parse(ss.str());
    cfg = model::Config::from_json_text(manifest.at("config").dump());
  } else {
    cfg = load_config(config_path, overrides);
  }
  fs::create_directories(out_dir);

  auto docs = corpus::generate_synthetic(cfg.synthetic.gen, cfg.synthetic.seed);
  int n_train = 0, n_dev = 0;
  split_counts(static_cast<int>(docs.size()), cfg.synthetic.split, &n_train, &n_dev);
  std::vector<corpus::Document> train_docs(docs.begin(), docs.begin() + n_train);
  std::vector<corpus::Document> dev_docs(docs.begin() + n_train, docs.begin() + n_train + n_dev);
  std::vector<corpus::Document> test_docs(docs.begin() + n_train + n_dev, docs.end());

  corpus::save_corpus(train_docs, (fs::path(out_dir) / "train.jsonl").string());
  corpus::save_corpus(dev_docs, (fs::path(out_dir) / "dev.jsonl").string());
  corpus::save_corpus(test_docs, (fs::path(out_dir) / "test.jsonl").string());

  json manifest;
  manifest["config"] = json::parse(cfg.to_json_text(0));
  manifest["files"] = {{"train", "train.jsonl"}, {"dev", "dev.jsonl"}, {"test", "test.jsonl"}};
  manifest["counts"] = {{"train", n_train}, {"dev", n_dev},
                        {"test", static_cast<int>(test_docs.size())}};
  write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << n_train << "/" << n_dev << "/" << test_docs.size()
            << " documents to " << out_dir << "\n";
  return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& train_path, const std::string& dev_path,
              const std::string& out_dir) {
  auto cfg = load_config(config_path, overrides);
  auto train_docs = corpus::load_corpus(train_path);
  std::vector<corpus::Document> dev_docs;
  if (!dev_path.empty()) dev_docs = corpus::load_corpus(dev_path);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "config.json", cfg.to_json_text(2) + "\n");
  std::ofstream metrics((fs::path(out_dir) / "metrics.jsonl").string());

  auto result = train::train_dispatch(cfg, train_docs, dev_docs, &metrics);
  train::save_checkpoint(result.best, (fs::path(out_dir) / "model.ckpt").string());

  std::cout << "best epoch " << result.best_epoch;
  if (!result.log.empty() && result.log.back().dev) {
    const auto& d = *result.log.back().dev;
    std::cout << "  final dev: entity_f1=" << format_double(d.entity_f1)
              << " relation_f1=" << format_double(d.relation_f1)
              << " antecedent_accuracy=" << format_double(d.antecedent_accuracy);
  }
  std::cout << "\n";
  return 0;
}

// -------------------------------------------------------------------- eval

json eval_reports(const std::vector<PredictedDoc>& preds,
                  const std::vector<corpus::Document>& docs, const model::Config& cfg,
                  eval::MatchMode mode, const std::string& buckets_spec, bool pronouns,
                  std::ostream& text) {
  json out;
  auto entity = eval::score_entities(preds, docs, mode, /*per_label=*/true);
  auto relation = eval::score_relations(preds, docs, /*per_label=*/true);
  auto coref = eval::antecedent_accuracy(preds, docs);
  out["entity"] = json::parse(eval::report_json(entity));
  out["relation"] = json::parse(eval::report_json(relation));
  out["antecedent_accuracy"] = {{"correct", coref.correct},
                                {"total", coref.total},
                                {"fraction", coref.fraction()}};
  text << eval::report_table("entity (" + std::string(mode == eval::MatchMode::kHead ? "head" : "span") + ")",
                             entity);
  text << eval::report_table("relation", relation);
  text << "antecedent accuracy      " << coref.correct << "/" << coref.total << " = "
       << format_double(coref.fraction()) << "\n";

  if (!buckets_spec.empty()) {
    auto buckets = eval::breakdown_by_entity_count(preds, docs, eval::parse_buckets(buckets_spec));
    json jb = json::array();
    for (const auto& b : buckets) {
      json entry = json::parse(eval::report_json(b.report));
      entry["bucket"] = b.bucket.label;
      entry["sentences"] = b.sentences;
      jb.push_back(std::move(entry));
    }
    out["relation_by_entity_count"] = std::move(jb);
    text << eval::buckets_table(buckets);
  }
  if (pronouns) {
    auto pr = eval::pronoun_subset_report(preds, docs, eval::default_pronoun_lexicon());
    out["entity_pronouns"] = json::parse(eval::report_json(pr));
    text << eval::report_table("entity (pronouns)", pr);
  }
  return out;
}

int cmd_eval(const std::string& ckpt_path, const std::string& corpus_path,
             const std::string& predictions_path, const std::string& match_mode,
             const std::string& buckets_spec, bool pronouns, const std::string& compare_path,
             const std::string& out_dir) {
  auto ckpt = train::load_checkpoint(ckpt_path);
  auto docs = corpus::load_corpus(corpus_path);
  for (const auto& doc : docs) {
    try {
      corpus::validate_document(doc, ckpt.config.schema);
    } catch (const corpus::CorpusError& e) {
      throw std::runtime_error("schema mismatch between checkpoint and corpus: " +
                               std::string(e.what()));
    }
  }
  eval::MatchMode mode = eval::MatchMode::kSpan;
  if (match_mode == "head")
    mode = eval::MatchMode::kHead;
  else if (match_mode != "span")
    throw UsageError("--match-mode must be span or head");

  auto preds = predictions_path.empty() ? train::predict_corpus(ckpt, docs)
                                        : eval::load_predictions(predictions_path);
  std::ostringstream text;
  json out = eval_reports(preds, docs, ckpt.config, mode, buckets_spec, pronouns, text);

  if (!compare_path.empty()) {
    auto other = train::load_checkpoint(compare_path);
    auto other_preds = train::predict_corpus(other, docs);
    auto delta = eval::confusion_delta(preds, other_preds, docs,
                                       ckpt.config.schema.entity_labels);
    json jd;
    jd["labels"] = delta.labels;
    jd["delta"] = delta.delta;
    out["confusion_delta"] = std::move(jd);
    text << "confusion delta (this minus compared):\n" << eval::confusion_table(delta);
  }

  std::cout << text.str();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "reports.json", out.dump(2) + "\n");
    write_file(fs::path(out_dir) / "reports.txt", text.str());
  } else {
    std::cout << out.dump() << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------ predict

int cmd_predict(const std::string& ckpt_path, const std::string& corpus_path,
                const std::string& out_path) {
  auto ckpt = train::load_checkpoint(ckpt_path);
  auto docs = corpus::load_corpus(corpus_path);
  for (const auto& doc : docs) {
    try {
      corpus::validate_document(doc, ckpt.config.schema);
    } catch (const corpus::CorpusError& e) {
      throw std::runtime_error("schema mismatch between checkpoint and corpus: " +
                               std::string(e.what()));
    }
  }
  auto preds = train::predict_corpus(ckpt, docs);
  eval::save_predictions(preds, docs, out_path);
  std::cout << "wrote " << preds.size() << " documents to " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& config_path, const std::vector<std::string>& overrides,
                  double h, double tol, bool corrupt, uint64_t seed, uint64_t doc_seed) {
  model::Config cfg =
      config_path.empty() ? model::verification_config() : load_config(config_path, overrides);
  cfg.precision = model::Precision::kFloat64;
  if (seed != 0) cfg.train.seed = seed;

  corpus::GenConfig gen;
  gen.num_docs = 1;
  gen.sentences_per_doc = 2;
  gen.tokens_per_sentence = 7;
  gen.nesting_rate = 1.0;
  gen.pronoun_rate = 1.0;
  gen.schema = cfg.schema;
  auto doc = doc_seed == 4242 && config_path.empty()
                 ? model::verification_document()
                 : corpus::generate_synthetic(gen, doc_seed)[0];

  double margin = model::relu_kink_margin(cfg, doc);
  std::cout << "relu kink margin: " << margin << " (probe step " << h << ")\n";
  auto report = model::model_grad_check(cfg, doc, h, tol, corrupt);
  std::cout << report.summary();
  return report.pass ? 0 : 1;
}

// ------------------------------------------------------------------- ablate

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

std::vector<GridAxis> parse_grid(const std::string& spec) {
  std::vector<GridAxis> axes;
  std::istringstream is(spec);
  std::string part;
  while (std::getline(is, part, ';')) {
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos) throw UsageError("grid axis must be key=v1,v2,...: " + part);
    GridAxis axis;
    axis.key = part.substr(0, eq);
    std::istringstream vs(part.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) axis.values.push_back(v);
    if (axis.values.empty()) throw UsageError("grid axis has no values: " + part);
    const std::set<std::string> allowed{"N", "M", "order", "disable-coref", "disable-rel"};
    if (!allowed.count(axis.key)) throw UsageError("unknown grid axis: " + axis.key);
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw UsageError("empty --grid");
  return axes;
}

std::vector<std::string> cell_overrides(const std::vector<GridAxis>& axes,
                                        const std::vector<size_t>& pick) {
  std::vector<std::string> overrides;
  for (size_t a = 0; a < axes.size(); ++a) {
    const auto& key = axes[a].key;
    const auto& value = axes[a].values[pick[a]];
    if (key == "N" || key == "M")
      overrides.push_back("graph." + key + "=" + value);
    else if (key == "order")
      overrides.push_back("graph.order=" + value);
    else if (key == "disable-coref" && (value == "true" || value == "1"))
      overrides.push_back("graph.N=0");
    else if (key == "disable-rel" && (value == "true" || value == "1"))
      overrides.push_back("graph.M=0");
  }
  return overrides;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& train_path, const std::string& dev_path,
               const std::string& grid_spec, const std::string& out_path) {
  auto axes = parse_grid(grid_spec);
  auto train_docs = corpus::load_corpus(train_path);
  auto dev_docs = corpus::load_corpus(dev_path);
  if (dev_docs.empty()) throw UsageError("ablate needs a nonempty dev corpus");

  std::ofstream csv(out_path);
  if (!csv) throw std::runtime_error("cannot write " + out_path);
  for (const auto& axis : axes) csv << axis.key << ",";
  csv << "entity_p,entity_r,entity_f1,relation_p,relation_r,relation_f1,"
         "antecedent_accuracy,wall_time_s\n";

  std::vector<size_t> pick(axes.size(), 0);
  int cells = 0;
  while (true) {
    auto cell = cell_overrides(axes, pick);
    std::vector<std::string> all = overrides;
    all.insert(all.end(), cell.begin(), cell.end());
    auto cfg = load_config(config_path, all);

    auto start = std::chrono::steady_clock::now();
    auto result = train::train_dispatch(cfg, train_docs, dev_docs);
    auto preds = train::predict_corpus(result.best, dev_docs);
    auto entity = eval::score_entities(preds, dev_docs);
    auto relation = eval::score_relations(preds, dev_docs);
    auto coref = eval::antecedent_accuracy(preds, dev_docs);
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    for (size_t a = 0; a < axes.size(); ++a) csv << axes[a].values[pick[a]] << ",";
    csv << format_double(entity.precision) << "," << format_double(entity.recall) << ","
        << format_double(entity.f1) << "," << format_double(relation.precision) << ","
        << format_double(relation.recall) << "," << format_double(relation.f1) << ","
        << format_double(coref.fraction()) << "," << format_double(seconds) << "\n";
    csv.flush();
    ++cells;

    size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++pick[a] < axes[a].values.size()) break;
      pick[a] = 0;
    }
    if (a == axes.size()) break;
  }
  std::cout << "ablation grid complete: " << cells << " cells -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic span-graph information extraction"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, out_dir = ".", out_path;
  std::string train_path, dev_path, corpus_path, ckpt_path, compare_path, predictions_path;
  std::string match_mode = "span", buckets_spec, grid_spec;
  std::vector<std::string> overrides;
  bool pronouns = false, corrupt = false;
  double h = 1e-4, tol = 1e-3;
  uint64_t gc_seed = 0, gc_doc_seed = 4242;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus with splits");
  gen->add_option("--config", config_path, "config JSON file");
  gen->add_option("--manifest", manifest_path, "regenerate from a manifest");
  gen->add_option("--set", overrides, "dotted-key overrides (key.path=value)");
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "config JSON file")->required();
  tr->add_option("--set", overrides, "dotted-key overrides");
  tr->add_option("--train", train_path, "training corpus (JSON lines)")->required();
  tr->add_option("--dev", dev_path, "development corpus");
  tr->add_option("--out", out_dir, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "score a checkpoint or predictions file");
  ev->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  ev->add_option("--corpus", corpus_path, "gold corpus")->required();
  ev->add_option("--predictions", predictions_path, "score this predictions file instead");
  ev->add_option("--match-mode", match_mode, "span or head (default span)");
  ev->add_option("--buckets", buckets_spec, "relation breakdown buckets, e.g. 2,3,4-5,6-11,12+");
  ev->add_flag("--pronouns", pronouns, "add the pronoun-subset entity report");
  ev->add_option("--compare", compare_path, "second checkpoint for a confusion delta");
  ev->add_option("--out", out_path, "directory for reports.json / reports.txt");

  auto* pr = app.add_subcommand("predict", "write predictions for a corpus");
  pr->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  pr->add_option("--corpus", corpus_path, "input corpus")->required();
  pr->add_option("--out", out_path, "predictions file")->required();

  auto* gc = app.add_subcommand("gradcheck", "full-model finite-difference gradient check");
  gc->add_option("--config", config_path, "config JSON file (default: built-in small config)");
  gc->add_option("--set", overrides, "dotted-key overrides");
  gc->add_option("--step", h, "central difference step (default 1e-4)");
  gc->add_option("--tol", tol, "relative error tolerance (default 1e-3)");
  gc->add_flag("--corrupt", corrupt, "corrupt one analytic gradient (must fail; test hook)");
  gc->add_option("--seed", gc_seed, "parameter init seed (default: the built-in pinned seed)");
  gc->add_option("--doc-seed", gc_doc_seed, "synthetic document seed");

  auto* ab = app.add_subcommand("ablate", "train a grid of configurations and emit CSV");
  ab->add_option("--config", config_path, "config JSON file")->required();
  ab->add_option("--set", overrides, "dotted-key overrides");
  ab->add_option("--train", train_path, "training corpus")->required();
  ab->add_option("--dev", dev_path, "development corpus")->required();
  ab->add_option("--grid", grid_spec, "axes, e.g. \"N=0,1,2,3;M=0,1,2,3\"")->required();
  ab->add_option("--out", out_path, "CSV path (default ablate.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      if (config_path.empty() && manifest_path.empty())
        throw UsageError("gen-data needs --config or --manifest");
      return cmd_gen_data(config_path, manifest_path, overrides, out_dir);
    }
    if (tr->parsed()) return cmd_train(config_path, overrides, train_path, dev_path, out_dir);
    if (ev->parsed())
      return cmd_eval(ckpt_path, corpus_path, predictions_path, match_mode, buckets_spec,
                      pronouns, compare_path, out_path);
    if (pr->parsed()) return cmd_predict(ckpt_path, corpus_path, out_path);
    if (gc->parsed()) return cmd_gradcheck(config_path, overrides, h, tol, corrupt, gc_seed, gc_doc_seed);
    if (ab->parsed())
      return cmd_ablate(config_path, overrides, train_path, dev_path, grid_spec,
                        out_path.empty() ? "ablate.csv" : out_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const model::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
