#include "dygie/corpus/embeddings.hpp"

#include <fstream>
#include <sstream>

#include "dygie/corpus/corpus.hpp"

namespace dygie::corpus {

int EmbeddingTable::lookup(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? unk_row() : it->second;
}

EmbeddingTable load_embeddings(const std::string& path, int expected_dim) {
  if (expected_dim <= 0) throw CorpusError("load_embeddings: expected_dim must be positive");
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open embedding file: " + path);

  EmbeddingTable table;
  table.dim = expected_dim;
  std::vector<float> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    is >> token;
    std::vector<float> vec;
    double v;
    while (is >> v) vec.push_back(static_cast<float>(v));
    if (static_cast<int>(vec.size()) != expected_dim)
      throw CorpusError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expected_dim) + " floats for \"" + token + "\", got " +
                        std::to_string(vec.size()));
    if (table.index.count(token)) {
      table.warnings.push_back("line " + std::to_string(line_no) + ": duplicate token \"" + token +
                               "\" ignored (first occurrence wins)");
      continue;
    }
    table.index.emplace(token, static_cast<int>(table.tokens.size()));
    table.tokens.push_back(token);
    rows.insert(rows.end(), vec.begin(), vec.end());
  }
  rows.resize(rows.size() + 2 * static_cast<size_t>(expected_dim), 0.0f);  // unk + pad
  table.vectors = numeric::Tensor<float>(
      {static_cast<int>(table.tokens.size()) + 2, expected_dim});
  table.vectors.data = std::move(rows);
  return table;
}

EmbeddingTable build_vocabulary(const std::vector<Document>& docs, int dim) {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;
  for (const auto& doc : docs)
    for (const auto& sent : doc.sentences)
      for (const auto& tok : sent)
        if (index.emplace(tok, static_cast<int>(tokens.size())).second) tokens.push_back(tok);
  return table_from_tokens(std::move(tokens), dim);
}

EmbeddingTable table_from_tokens(std::vector<std::string> tokens, int dim) {
  EmbeddingTable table;
  table.dim = dim;
  table.tokens = std::move(tokens);
  for (size_t i = 0; i < table.tokens.size(); ++i)
    table.index.emplace(table.tokens[i], static_cast<int>(i));
  table.vectors = numeric::Tensor<float>({static_cast<int>(table.tokens.size()) + 2, dim});
  return table;
}

}  // namespace dygie::corpus
