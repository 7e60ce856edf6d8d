#include "dygie/corpus/synthetic.hpp"

#include <array>

#include "dygie/corpus/corpus.hpp"
#include "dygie/rng.hpp"

namespace dygie::corpus {

namespace {

constexpr int kMentionForms = 5;
constexpr int kFillerKinds = 10;
constexpr std::array<const char*, 5> kPronouns = {"it", "they", "them", "we", "one"};

std::string mention_token(int type, int form) {
  return "ent" + std::to_string(type) + "x" + std::to_string(form);
}

// A segment is a run of tokens that stays contiguous during layout; spans
// are attached to token positions inside their segment.
struct Segment {
  std::vector<std::string> tokens;
  // (local offset, width, entity label index, nested?) for spans inside
  struct Mark {
    int offset;
    int width;
    int label;
  };
  std::vector<Mark> marks;
  int role = -1;  // 0 = A, 1 = B, 2 = pronoun, -1 = filler
};

}  // namespace

LabelSchema default_synthetic_schema() {
  LabelSchema s;
  s.entity_labels = {"T0", "T1", "T2", "T3"};
  s.relation_labels = {"R0", "R1", "R2"};
  return s;
}

std::vector<Document> generate_synthetic(const GenConfig& config, uint64_t seed) {
  if (config.num_docs <= 0 || config.sentences_per_doc <= 0)
    throw CorpusError("generate_synthetic: counts must be positive");
  if (config.tokens_per_sentence < 7)
    throw CorpusError("generate_synthetic: tokens_per_sentence must be >= 7");
  if (config.nesting_rate < 0 || config.nesting_rate > 1 || config.pronoun_rate < 0 ||
      config.pronoun_rate > 1)
    throw CorpusError("generate_synthetic: rates must be in [0, 1]");
  config.schema.validate();
  const int n_ent = config.schema.entity_count();
  const int n_rel = config.schema.relation_count();
  if (n_ent < 1 || n_rel < 1)
    throw CorpusError("generate_synthetic: schema needs entity and relation labels");

  std::vector<Document> docs;
  for (int i = 0; i < config.num_docs; ++i) {
    Rng rng(derive_key(seed, {fnv1a("doc"), static_cast<uint64_t>(i)}));
    const uint64_t pronoun_key = derive_key(seed, {fnv1a("pronoun"), static_cast<uint64_t>(i)});
    const uint64_t nest_key = derive_key(seed, {fnv1a("nest"), static_cast<uint64_t>(i)});

    Document doc;
    doc.doc_id = "syn" + std::to_string(i);
    const int protagonist = rng.below(n_ent);
    std::vector<Span> cluster;

    for (int s = 0; s < config.sentences_per_doc; ++s) {
      const bool pronoun_slot =
          s >= 1 && unit_at(pronoun_key, static_cast<uint64_t>(s)) < config.pronoun_rate;
      const bool nest_slot = unit_at(nest_key, static_cast<uint64_t>(s)) < config.nesting_rate;

      const int a = s == 0 ? protagonist : rng.below(n_ent);
      const int fa = rng.below(kMentionForms);
      const int b = rng.below(n_ent);
      const int fb = rng.below(kMentionForms);

      Segment unit_a;
      unit_a.role = 0;
      if (s == 0) {
        unit_a.tokens = {"ref", mention_token(a, fa)};
        unit_a.marks.push_back({1, 1, a});
      } else {
        unit_a.tokens = {mention_token(a, fa)};
        unit_a.marks.push_back({0, 1, a});
      }

      Segment unit_b;
      unit_b.role = 1;
      if (nest_slot) {
        const int c = rng.below(n_ent);
        const int fc = rng.below(kMentionForms);
        unit_b.tokens = {mention_token(b, fb), mention_token(c, fc)};
        unit_b.marks.push_back({0, 2, b});  // outer
        unit_b.marks.push_back({1, 1, c});  // nested inner
      } else {
        unit_b.tokens = {mention_token(b, fb)};
        unit_b.marks.push_back({0, 1, b});
      }

      Segment unit_p;
      if (pronoun_slot) {
        unit_p.role = 2;
        unit_p.tokens = {kPronouns[rng.below(static_cast<int>(kPronouns.size()))]};
        unit_p.marks.push_back({0, 1, protagonist});
      }

      int mention_tokens = static_cast<int>(unit_a.tokens.size() + unit_b.tokens.size() +
                                            unit_p.tokens.size());
      int n_fillers = config.tokens_per_sentence - mention_tokens;

      std::vector<Segment> segments(n_fillers);
      for (auto& seg : segments) seg.tokens = {"f" + std::to_string(rng.below(kFillerKinds))};
      auto insert_unit = [&](Segment&& unit) {
        int pos = rng.below(static_cast<int>(segments.size()) + 1);
        segments.insert(segments.begin() + pos, std::move(unit));
      };
      insert_unit(std::move(unit_a));
      insert_unit(std::move(unit_b));
      if (pronoun_slot) insert_unit(std::move(unit_p));

      const int sent_offset = doc.total_tokens;
      std::vector<std::string> sentence;
      Span span_a, span_b;
      for (const auto& seg : segments) {
        const int base = sent_offset + static_cast<int>(sentence.size());
        for (size_t m = 0; m < seg.marks.size(); ++m) {
          const auto& mark = seg.marks[m];
          Span sp{s, base + mark.offset, base + mark.offset + mark.width - 1};
          doc.entities.push_back({sp, config.schema.entity_labels[mark.label], std::nullopt});
          if (seg.role == 0) span_a = sp;
          if (seg.role == 1 && m == 0) span_b = sp;  // outer span is listed first
          if (seg.role == 2) cluster.push_back(sp);
        }
        for (const auto& tok : seg.tokens) sentence.push_back(tok);
      }
      doc.sentences.push_back(std::move(sentence));
      doc.finalize();

      const int r = (a + 2 * b) % n_rel;
      doc.relations.push_back({span_a, span_b, config.schema.relation_labels[r]});
      if (s == 0) cluster.push_back(span_a);
    }
    if (cluster.size() >= 2) doc.clusters.push_back(std::move(cluster));
    doc.finalize();
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace dygie::corpus
