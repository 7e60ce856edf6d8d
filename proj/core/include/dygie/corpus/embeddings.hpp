#pragma once

// Token -> vector table. Two extra rows are always appended after the
// vocabulary: one for unknown tokens and one for padding, both zero
// initialized. Vectors are stored as float32 regardless of run precision.

#include <string>
#include <unordered_map>
#include <vector>

#include "dygie/corpus/types.hpp"
#include "dygie/numeric/tensor.hpp"

namespace dygie::corpus {

struct EmbeddingTable {
  std::vector<std::string> tokens;              // vocabulary, row i = tokens[i]
  std::unordered_map<std::string, int> index;   // token -> row
  numeric::Tensor<float> vectors;               // (|V| + 2) x dim
  int dim = 0;
  std::vector<std::string> warnings;            // duplicate-token notes from loading

  int unk_row() const { return static_cast<int>(tokens.size()); }
  int pad_row() const { return static_cast<int>(tokens.size()) + 1; }
  int row_count() const { return static_cast<int>(tokens.size()) + 2; }
  // Row for `token`, falling back to the unknown row.
  int lookup(const std::string& token) const;
};

// Whitespace-separated text: token then `expected_dim` decimal floats per
// line. Duplicate tokens keep the first occurrence and record a warning;
// a wrong float count raises with the line number.
EmbeddingTable load_embeddings(const std::string& path, int expected_dim);

// Vocabulary in first-occurrence order over the corpus, zero vectors.
EmbeddingTable build_vocabulary(const std::vector<Document>& docs, int dim);

// Table from an explicit token list (used when restoring from a checkpoint).
EmbeddingTable table_from_tokens(std::vector<std::string> tokens, int dim);

}  // namespace dygie::corpus
