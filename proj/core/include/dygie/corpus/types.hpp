#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dygie::corpus {

// A contiguous token interval inside one sentence. `start`/`end` are
// document-level token offsets, end inclusive (the SciERC file convention);
// the sentence index is kept redundantly for O(1) within-sentence checks.
struct Span {
  int sentence = 0;
  int start = 0;
  int end = 0;

  int width() const { return end - start + 1; }
  friend bool operator==(const Span& a, const Span& b) {
    return a.start == b.start && a.end == b.end;
  }
  friend auto operator<=>(const Span& a, const Span& b) {
    if (a.start != b.start) return a.start <=> b.start;
    return a.end <=> b.end;
  }
};

struct Entity {
  Span span;
  std::string label;
  std::optional<Span> head;  // optional head region for head-match scoring
};

// Ordered pair; both argument spans lie in the same sentence.
struct Relation {
  Span arg1;
  Span arg2;
  std::string label;
};

struct Document {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  std::vector<std::vector<Span>> clusters;  // cross-sentence coreference clusters

  // Derived layout, filled by finalize().
  std::vector<int> sentence_offsets;  // first document-level token index per sentence
  int total_tokens = 0;

  void finalize();
  int sentence_count() const { return static_cast<int>(sentences.size()); }
  int sentence_length(int s) const { return static_cast<int>(sentences[s].size()); }
  // Sentence containing document-level token index t, or -1.
  int sentence_of(int t) const;
  int to_local(const Span& s) const { return s.start - sentence_offsets[s.sentence]; }
  // Single-token span text, lowercased, for pronoun filtering.
  std::string span_text(const Span& s) const;
};

struct LabelSchema {
  std::vector<std::string> entity_labels;
  std::vector<std::string> relation_labels;

  int entity_count() const { return static_cast<int>(entity_labels.size()); }
  int relation_count() const { return static_cast<int>(relation_labels.size()); }
  // Index in the label list, or -1.
  int entity_index(const std::string& label) const;
  int relation_index(const std::string& label) const;
  void validate() const;  // unique labels, nonempty relation set not required
};

}  // namespace dygie::corpus
