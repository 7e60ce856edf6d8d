#include "dygie/encoder/encoder.hpp"

#include "dygie/rng.hpp"

namespace dygie::encoder {

using dygie::fnv1a;

std::vector<corpus::Span> enumerate_spans(int sentence_index, int sent_offset, int token_count,
                                          int max_width) {
  std::vector<corpus::Span> spans;
  for (int start = 0; start < token_count; ++start) {
    int last = std::min(start + max_width - 1, token_count - 1);
    for (int end = start; end <= last; ++end)
      spans.push_back({sentence_index, sent_offset + start, sent_offset + end});
  }
  return spans;
}

namespace {

template <class S>
using Var = typename numeric::Tape<S>::Var;

// One direction of the recurrence; `order` lists timesteps in visit order.
template <class S>
std::vector<Var<S>> lstm_direction(model::ParamBank<S>& bank, Var<S> embedded,
                                   const std::vector<int>& order, const std::string& prefix,
                                   const model::Config& config, const model::DropoutCtx& ctx,
                                   uint64_t sentence_key) {
  auto& tape = bank.tape();
  const int hidden = config.net.hidden;
  auto w_x = bank(prefix + ".w_x");
  auto w_h = bank(prefix + ".w_h");
  auto bias = bank(prefix + ".b");
  const uint64_t var_key = ctx.key(prefix + ".vardrop", sentence_key);

  auto h = tape.constant(numeric::Tensor<S>::zeros(1, hidden));
  auto c = tape.constant(numeric::Tensor<S>::zeros(1, hidden));
  std::vector<Var<S>> states(order.size());
  for (int t : order) {
    auto x_t = tape.slice(embedded, 0, t, 1);
    // variational dropout: the fixed key reuses one mask across timesteps
    auto h_in = tape.dropout(h, config.net.dropout_lstm, ctx.train, var_key);
    auto gates = tape.add(tape.add(tape.matmul(x_t, w_x), tape.matmul(h_in, w_h)), bias);
    auto i_g = tape.sigmoid(tape.slice(gates, 1, 0, hidden));
    auto f_g = tape.sigmoid(tape.slice(gates, 1, hidden, hidden));
    auto o_g = tape.sigmoid(tape.slice(gates, 1, 2 * hidden, hidden));
    auto cand = tape.tanh(tape.slice(gates, 1, 3 * hidden, hidden));
    c = tape.add(tape.mul(f_g, c), tape.mul(i_g, cand));
    h = tape.mul(o_g, tape.tanh(c));
    states[t] = h;
  }
  return states;
}

}  // namespace

template <class S>
typename numeric::Tape<S>::Var encode_tokens(model::ParamBank<S>& bank,
                                             const std::vector<int>& token_rows,
                                             const model::Config& config,
                                             const model::DropoutCtx& ctx, uint64_t sentence_key) {
  if (token_rows.empty()) throw std::runtime_error("encode_tokens: empty sentence");
  auto& tape = bank.tape();
  auto embedded = tape.gather_rows(bank("embed.tokens"), token_rows);
  embedded = tape.dropout(embedded, config.net.dropout_input, ctx.train,
                          ctx.key("embed.drop", sentence_key));

  const int T = static_cast<int>(token_rows.size());
  std::vector<int> fwd(T), bwd(T);
  for (int t = 0; t < T; ++t) {
    fwd[t] = t;
    bwd[t] = T - 1 - t;
  }
  auto fw_states = lstm_direction(bank, embedded, fwd, "lstm.fw", config, ctx, sentence_key);
  auto bw_states = lstm_direction(bank, embedded, bwd, "lstm.bw", config, ctx, sentence_key);

  std::vector<typename numeric::Tape<S>::Var> rows;
  rows.reserve(T);
  for (int t = 0; t < T; ++t) rows.push_back(tape.concat({fw_states[t], bw_states[t]}, 1));
  return tape.concat(rows, 0);
}

template <class S>
typename numeric::Tape<S>::Var span_representations(model::ParamBank<S>& bank,
                                                    typename numeric::Tape<S>::Var tokens,
                                                    const std::vector<corpus::Span>& spans,
                                                    int sent_offset, const model::Config& config,
                                                    const model::DropoutCtx& ctx,
                                                    uint64_t sentence_key) {
  if (spans.empty()) throw std::runtime_error("span_representations: no spans");
  auto& tape = bank.tape();

  auto hidden = tape.relu(
      tape.add_rowvec(tape.matmul(tokens, bank("attn.w0")), bank("attn.b0")));
  hidden = tape.dropout(hidden, config.net.dropout_ffnn, ctx.train,
                        ctx.key("attn.drop", sentence_key));
  auto scores = tape.add_rowvec(tape.matmul(hidden, bank("attn.w1")), bank("attn.b1"));

  std::vector<int> starts, ends, width_rows;
  std::vector<std::pair<int, int>> ranges;
  for (const auto& span : spans) {
    if (span.width() > config.net.max_span_width)
      throw std::runtime_error("span width " + std::to_string(span.width()) +
                               " exceeds max_span_width " +
                               std::to_string(config.net.max_span_width));
    starts.push_back(span.start - sent_offset);
    ends.push_back(span.end - sent_offset);
    ranges.emplace_back(span.start - sent_offset, span.end - sent_offset);
    width_rows.push_back(span.width() - 1);
  }
  auto left = tape.gather_rows(tokens, starts);
  auto right = tape.gather_rows(tokens, ends);
  auto headword = tape.span_attend(scores, tokens, ranges);
  auto widths = tape.gather_rows(bank("embed.width"), width_rows);
  return tape.concat({left, right, headword, widths}, 1);
}

template typename numeric::Tape<float>::Var encode_tokens<float>(
    model::ParamBank<float>&, const std::vector<int>&, const model::Config&,
    const model::DropoutCtx&, uint64_t);
template typename numeric::Tape<double>::Var encode_tokens<double>(
    model::ParamBank<double>&, const std::vector<int>&, const model::Config&,
    const model::DropoutCtx&, uint64_t);
template typename numeric::Tape<float>::Var span_representations<float>(
    model::ParamBank<float>&, typename numeric::Tape<float>::Var,
    const std::vector<corpus::Span>&, int, const model::Config&, const model::DropoutCtx&,
    uint64_t);
template typename numeric::Tape<double>::Var span_representations<double>(
    model::ParamBank<double>&, typename numeric::Tape<double>::Var,
    const std::vector<corpus::Span>&, int, const model::Config&, const model::DropoutCtx&,
    uint64_t);

}  // namespace dygie::encoder
