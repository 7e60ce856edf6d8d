#pragma once

// Deterministic synthetic corpus generator.
//
// The generator is a pure function of (config, seed). Sampling procedure,
// in order (see docs/synthetic.md for the full walkthrough):
//
//   streams
//     pronoun slot for (doc i, sentence s>=1):
//         unit_at(derive_key(seed, {fnv1a("pronoun"), i}), s) < pronoun_rate
//     nesting slot for (doc i, sentence s):
//         unit_at(derive_key(seed, {fnv1a("nest"), i}), s) < nesting_rate
//     all other draws come from Rng(derive_key(seed, {fnv1a("doc"), i}))
//     consumed in the documented order below.
//
//   per document i:
//     protagonist type p = rng.below(E)
//     per sentence s:
//       type a = (s == 0 ? p : rng.below(E)), form fa = rng.below(5)
//       type b = rng.below(E), form fb = rng.below(5)
//       if nest slot: inner type c = rng.below(E), form fc = rng.below(5)
//       if pronoun slot: pronoun word index = rng.below(5)
//       filler token ids (one rng.below(10) per filler)
//       unit insertion points (one rng.below(segments + 1) per unit,
//       in order A, B, pronoun)
//
// Sentence content: unit A = the type-a mention token "ent{a}x{fa}"
// (sentence 0 prefixes the marker token "ref"; the gold span covers only
// the mention token); unit B = "ent{b}x{fb}" or, on nesting slots, the pair
// ["ent{b}x{fb}", "ent{c}x{fc}"] where the outer width-2 span is labeled b
// and the nested width-1 span over the second token is labeled c; fillers
// are "f{k}". One gold relation per sentence, (span_A, span_B), with label
// index (a + 2 b) mod R -- the type is a function of both argument types.
// Pronoun slots add one pronoun token ("it", "they", "them", "we" or
// "one") as a width-1 gold entity of type p, clustered with the sentence-0
// protagonist mention; its label is recoverable only through that
// antecedent. The per-document cluster is emitted when it has >= 2 spans.

#include <cstdint>
#include <vector>

#include "dygie/corpus/types.hpp"

namespace dygie::corpus {

struct GenConfig {
  int num_docs = 20;
  int sentences_per_doc = 2;
  int tokens_per_sentence = 8;  // must be >= 7 to leave room for fillers
  double nesting_rate = 0.0;
  double pronoun_rate = 0.0;
  LabelSchema schema;
};

LabelSchema default_synthetic_schema();

std::vector<Document> generate_synthetic(const GenConfig& config, uint64_t seed);

}  // namespace dygie::corpus
