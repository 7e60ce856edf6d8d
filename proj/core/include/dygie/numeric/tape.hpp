#pragma once

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Tape records primitive operations in topological order; backward()
// walks the recording once in reverse and accumulates gradients into every
// node that requires them. Leaves are either owned inputs, constants, or
// externally stored parameter tensors (no copy).
//
// Precision is fixed per tape by the scalar template argument: float for
// training, double for verification. The two are never mixed.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dygie/numeric/tensor.hpp"

namespace dygie::numeric {

template <class S>
class Tape {
 public:
  struct Var {
    int32_t id = -1;
    uint32_t tape = 0;
    bool valid() const { return id >= 0; }
  };

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // -- leaves ---------------------------------------------------------
  Var input(Tensor<S> value, bool requires_grad = false);
  Var constant(Tensor<S> value) { return input(std::move(value), false); }
  // External parameter storage; the caller keeps `value` alive for the
  // lifetime of the tape.
  Var param(const Tensor<S>* value);

  // -- primitives -----------------------------------------------------
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, S factor);
  Var add_rowvec(Var a, Var row);  // broadcast a 1xC row over an RxC matrix
  Var concat(const std::vector<Var>& xs, int axis);
  Var slice(Var a, int axis, int begin, int count);
  Var sum(Var a, int axis);  // axis 0 -> 1xC, axis 1 -> Rx1
  Var sum_all(Var a);        // 1x1
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var log(Var a);
  Var softmax_row(Var a);
  // In train mode zeroes each element with probability `rate` and rescales
  // survivors by 1/(1-rate); mask element k is kept iff
  // unit_at(mask_key, k) >= rate. Identity when !train or rate == 0.
  Var dropout(Var a, double rate, bool train, uint64_t mask_key);
  Var reshape(Var a, int rows, int cols);  // same element count, row-major order kept
  Var gather_rows(Var a, std::vector<int> idx);
  // Copy of `base` with row idx[k] replaced by rows.row(k); idx unique.
  Var row_replace(Var base, std::vector<int> idx, Var rows);
  // For each [start, end] range (inclusive, row indices into values):
  // out.row(k) = sum_t softmax(scores[start..end])_t * values.row(t).
  Var span_attend(Var scores, Var values, std::vector<std::pair<int, int>> ranges);

  // -- gradients ------------------------------------------------------
  // Accumulates; repeated calls without zero_grad() add up.
  void backward(Var loss);
  void zero_grad();

  const Tensor<S>& value(Var v) const;
  const Tensor<S>& grad(Var v) const;  // empty-shape tensor when untouched
  bool requires_grad(Var v) const;
  size_t size() const { return nodes_.size(); }

  // Smallest |x| over every relu input recorded on this tape, ignoring
  // sentinel magnitudes above 1e6. Gradient checks need this margin well
  // clear of the probe step; a probe that straddles a kink produces a
  // finite-difference error unrelated to gradient correctness.
  double min_relu_input_magnitude() const;

 private:
  struct Node {
    Tensor<S> owned;
    const Tensor<S>* ext = nullptr;
    Tensor<S> grad;
    bool requires_grad = false;
    std::function<void()> backward;
    const Tensor<S>& val() const { return ext ? *ext : owned; }
  };

  const Node& node(Var v) const;
  Var emit(Tensor<S> value, bool requires_grad, std::function<void()> bw);
  Tensor<S>& grad_buf(int32_t id);
  void check(Var v, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<int32_t> relu_input_ids_;
  uint32_t tape_id_;
  static Tensor<S> empty_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace dygie::numeric
