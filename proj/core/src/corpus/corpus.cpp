#include "dygie/corpus/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dygie::corpus {

using json = nlohmann::ordered_json;

void Document::finalize() {
  sentence_offsets.clear();
  total_tokens = 0;
  for (const auto& sent : sentences) {
    sentence_offsets.push_back(total_tokens);
    total_tokens += static_cast<int>(sent.size());
  }
}

int Document::sentence_of(int t) const {
  if (t < 0 || t >= total_tokens) return -1;
  int s = 0;
  while (s + 1 < sentence_count() && sentence_offsets[s + 1] <= t) ++s;
  return s;
}

std::string Document::span_text(const Span& s) const {
  std::string out;
  for (int t = s.start; t <= s.end; ++t) {
    if (t != s.start) out += ' ';
    out += sentences[s.sentence][t - sentence_offsets[s.sentence]];
  }
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

int LabelSchema::entity_index(const std::string& label) const {
  auto it = std::find(entity_labels.begin(), entity_labels.end(), label);
  return it == entity_labels.end() ? -1 : static_cast<int>(it - entity_labels.begin());
}

int LabelSchema::relation_index(const std::string& label) const {
  auto it = std::find(relation_labels.begin(), relation_labels.end(), label);
  return it == relation_labels.end() ? -1 : static_cast<int>(it - relation_labels.begin());
}

void LabelSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& l : entity_labels)
    if (!seen.insert("e:" + l).second) throw CorpusError("schema: duplicate entity label " + l);
  for (const auto& l : relation_labels)
    if (!seen.insert("r:" + l).second) throw CorpusError("schema: duplicate relation label " + l);
}

namespace {

// Resolves a [start, end] pair against the document layout; throws with
// context on any structural problem.
Span resolve_span(const Document& doc, int start, int end, const std::string& what) {
  if (start > end)
    throw CorpusError(doc.doc_id + ": degenerate span [" + std::to_string(start) + ", " +
                      std::to_string(end) + "] in " + what);
  int s1 = doc.sentence_of(start);
  int s2 = doc.sentence_of(end);
  if (s1 < 0 || s2 < 0)
    throw CorpusError(doc.doc_id + ": span [" + std::to_string(start) + ", " +
                      std::to_string(end) + "] out of range in " + what);
  if (s1 != s2)
    throw CorpusError(doc.doc_id + ": span [" + std::to_string(start) + ", " +
                      std::to_string(end) + "] crosses sentences in " + what);
  return Span{s1, start, end};
}

}  // namespace

Document parse_document(const std::string& json_line) {
  json j = json::parse(json_line);
  if (!j.is_object()) throw CorpusError("document is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "doc_id" && key != "sentences" && key != "ner" && key != "relations" &&
        key != "clusters" && key != "antecedents")
      throw CorpusError("unknown field \"" + key + "\"");
  }
  Document doc;
  doc.doc_id = j.at("doc_id").get<std::string>();
  for (const auto& sent : j.at("sentences")) {
    std::vector<std::string> tokens;
    for (const auto& tok : sent) tokens.push_back(tok.get<std::string>());
    doc.sentences.push_back(std::move(tokens));
  }
  doc.finalize();

  const json& ner = j.at("ner");
  if (ner.size() != doc.sentences.size())
    throw CorpusError(doc.doc_id + ": ner has " + std::to_string(ner.size()) +
                      " sentence groups, document has " + std::to_string(doc.sentences.size()));
  for (size_t s = 0; s < ner.size(); ++s) {
    for (const auto& ent : ner[s]) {
      if (!ent.is_array() || (ent.size() != 3 && ent.size() != 5))
        throw CorpusError(doc.doc_id + ": ner entry must be [start, end, label] or " +
                          "[start, end, label, hstart, hend]");
      Entity e;
      e.span = resolve_span(doc, ent[0].get<int>(), ent[1].get<int>(), "ner");
      e.label = ent[2].get<std::string>();
      if (static_cast<size_t>(e.span.sentence) != s)
        throw CorpusError(doc.doc_id + ": ner span listed under sentence " + std::to_string(s) +
                          " but lies in sentence " + std::to_string(e.span.sentence));
      if (ent.size() == 5) {
        Span head = resolve_span(doc, ent[3].get<int>(), ent[4].get<int>(), "ner head");
        if (head.sentence != e.span.sentence)
          throw CorpusError(doc.doc_id + ": head region outside entity sentence");
        e.head = head;
      }
      doc.entities.push_back(std::move(e));
    }
  }

  const json& rels = j.at("relations");
  if (rels.size() != doc.sentences.size())
    throw CorpusError(doc.doc_id + ": relations has " + std::to_string(rels.size()) +
                      " sentence groups, document has " + std::to_string(doc.sentences.size()));
  for (size_t s = 0; s < rels.size(); ++s) {
    for (const auto& rel : rels[s]) {
      if (!rel.is_array() || rel.size() != 5)
        throw CorpusError(doc.doc_id + ": relation entry must be [s1, e1, s2, e2, label]");
      Relation r;
      r.arg1 = resolve_span(doc, rel[0].get<int>(), rel[1].get<int>(), "relations");
      r.arg2 = resolve_span(doc, rel[2].get<int>(), rel[3].get<int>(), "relations");
      r.label = rel[4].get<std::string>();
      if (r.arg1.sentence != r.arg2.sentence)
        throw CorpusError(doc.doc_id + ": cross-sentence relation [" +
                          std::to_string(r.arg1.start) + ", " + std::to_string(r.arg2.start) +
                          "]");
      if (static_cast<size_t>(r.arg1.sentence) != s)
        throw CorpusError(doc.doc_id + ": relation listed under wrong sentence");
      doc.relations.push_back(std::move(r));
    }
  }

  if (j.contains("clusters")) {
    for (const auto& cluster : j.at("clusters")) {
      std::vector<Span> spans;
      for (const auto& sp : cluster)
        spans.push_back(resolve_span(doc, sp[0].get<int>(), sp[1].get<int>(), "clusters"));
      doc.clusters.push_back(std::move(spans));
    }
  }
  check_structure(doc);
  return doc;
}

void check_structure(const Document& doc) {
  std::set<std::pair<int, int>> cluster_spans;
  for (const auto& cluster : doc.clusters) {
    for (const auto& sp : cluster) {
      if (!cluster_spans.insert({sp.start, sp.end}).second)
        throw CorpusError(doc.doc_id + ": span [" + std::to_string(sp.start) + ", " +
                          std::to_string(sp.end) + "] appears in two clusters");
    }
  }
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      docs.push_back(parse_document(line));
    } catch (const json::exception& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": parse error: " + e.what());
    } catch (const CorpusError& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

std::string serialize_document(const Document& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  j["sentences"] = doc.sentences;
  json ner = json::array();
  json rels = json::array();
  for (int s = 0; s < doc.sentence_count(); ++s) {
    ner.push_back(json::array());
    rels.push_back(json::array());
  }
  for (const auto& e : doc.entities) {
    json entry = {e.span.start, e.span.end, e.label};
    if (e.head) {
      entry.push_back(e.head->start);
      entry.push_back(e.head->end);
    }
    ner[e.span.sentence].push_back(std::move(entry));
  }
  for (const auto& r : doc.relations)
    rels[r.arg1.sentence].push_back({r.arg1.start, r.arg1.end, r.arg2.start, r.arg2.end, r.label});
  j["ner"] = std::move(ner);
  j["relations"] = std::move(rels);
  json clusters = json::array();
  for (const auto& cluster : doc.clusters) {
    json c = json::array();
    for (const auto& sp : cluster) c.push_back({sp.start, sp.end});
    clusters.push_back(std::move(c));
  }
  j["clusters"] = std::move(clusters);
  return j.dump();
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  for (const auto& doc : docs) out << serialize_document(doc) << "\n";
}

std::vector<std::string> document_violations(const Document& doc, const LabelSchema& schema) {
  std::vector<std::string> out;
  auto span_ok = [&](const Span& sp, const std::string& what) {
    if (sp.start > sp.end) {
      out.push_back("degenerate span [" + std::to_string(sp.start) + ", " +
                    std::to_string(sp.end) + "] in " + what);
      return false;
    }
    if (sp.sentence < 0 || sp.sentence >= doc.sentence_count() ||
        doc.sentence_of(sp.start) != sp.sentence || doc.sentence_of(sp.end) != sp.sentence) {
      out.push_back("span [" + std::to_string(sp.start) + ", " + std::to_string(sp.end) +
                    "] not inside sentence " + std::to_string(sp.sentence) + " in " + what);
      return false;
    }
    return true;
  };
  for (const auto& e : doc.entities) {
    span_ok(e.span, "ner");
    if (schema.entity_index(e.label) < 0) out.push_back("unknown entity label \"" + e.label + "\"");
    if (e.head) span_ok(*e.head, "ner head");
  }
  for (const auto& r : doc.relations) {
    bool ok = span_ok(r.arg1, "relations") && span_ok(r.arg2, "relations");
    if (ok && r.arg1.sentence != r.arg2.sentence) out.push_back("cross-sentence relation");
    if (schema.relation_index(r.label) < 0)
      out.push_back("unknown relation label \"" + r.label + "\"");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& cluster : doc.clusters)
    for (const auto& sp : cluster) {
      span_ok(sp, "clusters");
      if (!seen.insert({sp.start, sp.end}).second)
        out.push_back("span [" + std::to_string(sp.start) + ", " + std::to_string(sp.end) +
                      "] appears in two clusters");
    }
  return out;
}

void validate_document(const Document& doc, const LabelSchema& schema) {
  auto violations = document_violations(doc, schema);
  if (violations.empty()) return;
  std::ostringstream os;
  os << doc.doc_id << ": " << violations.size() << " violation(s):";
  for (const auto& v : violations) os << "\n  - " << v;
  throw CorpusError(os.str());
}

}  // namespace dygie::corpus
