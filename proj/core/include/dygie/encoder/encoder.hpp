#pragma once

// Token representation layer (single-layer BiLSTM over trainable token
// embeddings) and span representation layer (endpoints + attended soft
// headword + width embedding).
//
// LSTM gate weight layout: the 4h columns of w_x / w_h / b are the blocks
// [input | forget | output | candidate]. Hidden and cell states start at
// zero; the variational dropout mask on the recurrent input is drawn once
// per sequence and reused at every timestep.

#include <vector>

#include "dygie/corpus/types.hpp"
#include "dygie/model/params.hpp"

namespace dygie::encoder {

// All spans up to max_width inside one sentence, ordered by (start, end).
// Offsets are document-level: local position p maps to sent_offset + p.
std::vector<corpus::Span> enumerate_spans(int sentence_index, int sent_offset, int token_count,
                                          int max_width);

template <class S>
typename numeric::Tape<S>::Var encode_tokens(model::ParamBank<S>& bank,
                                             const std::vector<int>& token_rows,
                                             const model::Config& config,
                                             const model::DropoutCtx& ctx, uint64_t sentence_key);
// -> T x 2*hidden, row t = [forward state at t ; backward state at t]

template <class S>
typename numeric::Tape<S>::Var span_representations(model::ParamBank<S>& bank,
                                                    typename numeric::Tape<S>::Var tokens,
                                                    const std::vector<corpus::Span>& spans,
                                                    int sent_offset, const model::Config& config,
                                                    const model::DropoutCtx& ctx,
                                                    uint64_t sentence_key);
// -> |spans| x span_dim, rows aligned with `spans`

}  // namespace dygie::encoder
