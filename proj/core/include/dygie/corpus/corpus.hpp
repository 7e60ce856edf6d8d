#pragma once

// JSON-lines document format.
//
// One document per line:
//   {"doc_id": "d0",
//    "sentences": [["a", "b"], ["c"]],
//    "ner":       [[[0, 1, "T"]], []],                  per sentence, [start, end, label]
//    "relations": [[[0, 0, 1, 1, "R"]], []],            per sentence, [s1, e1, s2, e2, label]
//    "clusters":  [[[0, 1], [2, 2]]]}                   document level, [start, end]
// All offsets are document-level token indices with inclusive ends. A ner
// entry may carry an optional head region: [start, end, label, hstart, hend].

#include <stdexcept>
#include <string>
#include <vector>

#include "dygie/corpus/types.hpp"

namespace dygie::corpus {

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses and structurally validates every line; throws CorpusError with the
// offending line number (parse) or doc_id (validation).
std::vector<Document> load_corpus(const std::string& path);
Document parse_document(const std::string& json_line);

std::string serialize_document(const Document& doc);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

// Structural invariants: spans inside one sentence, relations within a
// sentence, clusters pairwise disjoint. Throws CorpusError.
void check_structure(const Document& doc);

// Full validation including label membership in `schema`. Returns one
// message per violation; empty means valid.
std::vector<std::string> document_violations(const Document& doc, const LabelSchema& schema);
// Throws CorpusError aggregating all violations.
void validate_document(const Document& doc, const LabelSchema& schema);

}  // namespace dygie::corpus
