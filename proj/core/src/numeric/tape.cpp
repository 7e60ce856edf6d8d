#include "dygie/numeric/tape.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "dygie/rng.hpp"

namespace dygie::numeric {

namespace {

std::atomic<uint32_t> g_tape_counter{1};

template <class S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Map = Eigen::Map<EMat<S>>;
template <class S>
using CMap = Eigen::Map<const EMat<S>>;

template <class S>
CMap<S> cmap(const Tensor<S>& t) {
  return CMap<S>(t.ptr(), t.rows(), t.cols());
}
template <class S>
Map<S> map(Tensor<S>& t) {
  return Map<S>(t.ptr(), t.rows(), t.cols());
}

template <class S>
[[noreturn]] void shape_fail(const char* op, const Tensor<S>& a, const Tensor<S>& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                   shape_str(b.shape));
}

template <class S>
S stable_sigmoid(S x) {
  if (x >= 0) {
    S e = std::exp(-x);
    return S(1) / (S(1) + e);
  }
  S e = std::exp(x);
  return e / (S(1) + e);
}

}  // namespace

template <class S>
Tensor<S> Tape<S>::empty_{};

template <class S>
Tape<S>::Tape() : tape_id_(g_tape_counter.fetch_add(1)) {}

template <class S>
void Tape<S>::check(Var v, const char* op) const {
  if (!v.valid() || v.tape != tape_id_ || v.id >= static_cast<int32_t>(nodes_.size()))
    throw std::runtime_error(std::string(op) + ": node not on tape");
}

template <class S>
const typename Tape<S>::Node& Tape<S>::node(Var v) const {
  return nodes_[v.id];
}

template <class S>
typename Tape<S>::Var Tape<S>::emit(Tensor<S> value, bool requires_grad,
                                    std::function<void()> bw) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1), tape_id_};
}

template <class S>
Tensor<S>& Tape<S>::grad_buf(int32_t id) {
  Node& n = nodes_[id];
  if (n.grad.data.empty()) n.grad = Tensor<S>(n.val().shape);
  return n.grad;
}

template <class S>
typename Tape<S>::Var Tape<S>::input(Tensor<S> value, bool requires_grad) {
  return emit(std::move(value), requires_grad, nullptr);
}

template <class S>
typename Tape<S>::Var Tape<S>::param(const Tensor<S>* value) {
  Node n;
  n.ext = value;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1), tape_id_};
}

template <class S>
const Tensor<S>& Tape<S>::value(Var v) const {
  check(v, "value");
  return node(v).val();
}

template <class S>
const Tensor<S>& Tape<S>::grad(Var v) const {
  check(v, "grad");
  return node(v).grad.data.empty() ? empty_ : node(v).grad;
}

template <class S>
bool Tape<S>::requires_grad(Var v) const {
  check(v, "requires_grad");
  return node(v).requires_grad;
}

template <class S>
void Tape<S>::zero_grad() {
  for (auto& n : nodes_) n.grad = Tensor<S>();
}

template <class S>
void Tape<S>::backward(Var loss) {
  check(loss, "backward");
  if (node(loss).val().size() != 1)
    throw std::runtime_error("backward: loss must be scalar, got shape " +
                             shape_str(node(loss).val().shape));
  // Leaf gradients accumulate across calls; intermediate buffers are
  // per-pass scratch and must not be re-propagated.
  for (auto& n : nodes_)
    if (n.backward) n.grad = Tensor<S>();
  grad_buf(loss.id).data[0] += S(1);
  for (int32_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.data.empty() || !n.backward) continue;
    n.backward();
  }
}

// ---------------------------------------------------------------------
// primitives

template <class S>
typename Tape<S>::Var Tape<S>::matmul(Var a, Var b) {
  check(a, "matmul");
  check(b, "matmul");
  const Tensor<S>& A = node(a).val();
  const Tensor<S>& B = node(b).val();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) shape_fail("matmul", A, B);
  Tensor<S> out({A.rows(), B.cols()});
  map(out).noalias() = cmap(A) * cmap(B);
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int32_t ia = a.id, ib = b.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ia, ib, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    if (nodes_[ia].requires_grad)
      map(grad_buf(ia)).noalias() += cmap(dC) * cmap(nodes_[ib].val()).transpose();
    if (nodes_[ib].requires_grad)
      map(grad_buf(ib)).noalias() += cmap(nodes_[ia].val()).transpose() * cmap(dC);
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::matmul_nt(Var a, Var b) {
  check(a, "matmul_nt");
  check(b, "matmul_nt");
  const Tensor<S>& A = node(a).val();
  const Tensor<S>& B = node(b).val();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols()) shape_fail("matmul_nt", A, B);
  Tensor<S> out({A.rows(), B.rows()});
  map(out).noalias() = cmap(A) * cmap(B).transpose();
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int32_t ia = a.id, ib = b.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ia, ib, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    if (nodes_[ia].requires_grad)
      map(grad_buf(ia)).noalias() += cmap(dC) * cmap(nodes_[ib].val());
    if (nodes_[ib].requires_grad)
      map(grad_buf(ib)).noalias() += cmap(dC).transpose() * cmap(nodes_[ia].val());
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::add(Var a, Var b) {
  check(a, "add");
  check(b, "add");
  const Tensor<S>& A = node(a).val();
  const Tensor<S>& B = node(b).val();
  if (!same_shape(A, B)) shape_fail("add", A, B);
  Tensor<S> out = A;
  for (int64_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int32_t ia = a.id, ib = b.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ia, ib, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    for (int32_t in : {ia, ib}) {
      if (!nodes_[in].requires_grad) continue;
      Tensor<S>& g = grad_buf(in);
      for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += dC.data[i];
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::sub(Var a, Var b) {
  check(a, "sub");
  check(b, "sub");
  const Tensor<S>& A = node(a).val();
  const Tensor<S>& B = node(b).val();
  if (!same_shape(A, B)) shape_fail("sub", A, B);
  Tensor<S> out = A;
  for (int64_t i = 0; i < out.size(); ++i) out.data[i] -= B.data[i];
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int32_t ia = a.id, ib = b.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ia, ib, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    if (nodes_[ia].requires_grad) {
      Tensor<S>& g = grad_buf(ia);
      for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += dC.data[i];
    }
    if (nodes_[ib].requires_grad) {
      Tensor<S>& g = grad_buf(ib);
      for (int64_t i = 0; i < dC.size(); ++i) g.data[i] -= dC.data[i];
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::mul(Var a, Var b) {
  check(a, "mul");
  check(b, "mul");
  const Tensor<S>& A = node(a).val();
  const Tensor<S>& B = node(b).val();
  if (!same_shape(A, B)) shape_fail("mul", A, B);
  Tensor<S> out = A;
  for (int64_t i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int32_t ia = a.id, ib = b.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ia, ib, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    if (nodes_[ia].requires_grad) {
      Tensor<S>& g = grad_buf(ia);
      const Tensor<S>& B2 = nodes_[ib].val();
      for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += dC.data[i] * B2.data[i];
    }
    if (nodes_[ib].requires_grad) {
      Tensor<S>& g = grad_buf(ib);
      const Tensor<S>& A2 = nodes_[ia].val();
      for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += dC.data[i] * A2.data[i];
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::scale(Var a, S factor) {
  check(a, "scale");
  Tensor<S> out = node(a).val();
  for (auto& v : out.data) v *= factor;
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io, factor] {
    const Tensor<S>& dC = nodes_[io].grad;
    Tensor<S>& g = grad_buf(ia);
    for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += factor * dC.data[i];
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::add_rowvec(Var a, Var row) {
  check(a, "add_rowvec");
  check(row, "add_rowvec");
  const Tensor<S>& A = node(a).val();
  const Tensor<S>& R = node(row).val();
  if (R.rows() != 1 || R.cols() != A.cols()) shape_fail("add_rowvec", A, R);
  Tensor<S> out = A;
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out.at(r, c) += R.at(0, c);
  bool rg = node(a).requires_grad || node(row).requires_grad;
  int32_t ia = a.id, ir = row.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ia, ir, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    if (nodes_[ia].requires_grad) {
      Tensor<S>& g = grad_buf(ia);
      for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += dC.data[i];
    }
    if (nodes_[ir].requires_grad) {
      Tensor<S>& g = grad_buf(ir);
      for (int r = 0; r < dC.rows(); ++r)
        for (int c = 0; c < dC.cols(); ++c) g.at(0, c) += dC.at(r, c);
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw std::runtime_error("concat: no inputs");
  if (axis != 0 && axis != 1) throw std::runtime_error("concat: axis must be 0 or 1");
  if (xs.size() == 1) return xs[0];
  for (Var v : xs) check(v, "concat");
  const Tensor<S>& first = node(xs[0]).val();
  int rows = first.rows(), cols = first.cols();
  int total = 0;
  for (Var v : xs) {
    const Tensor<S>& t = node(v).val();
    if (axis == 0) {
      if (t.cols() != cols) shape_fail("concat", first, t);
      total += t.rows();
    } else {
      if (t.rows() != rows) shape_fail("concat", first, t);
      total += t.cols();
    }
  }
  Tensor<S> out(axis == 0 ? Shape{total, cols} : Shape{rows, total});
  bool rg = false;
  std::vector<int32_t> ids;
  std::vector<int> offsets;
  int off = 0;
  for (Var v : xs) {
    const Tensor<S>& t = node(v).val();
    if (axis == 0) {
      std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<size_t>(off) * cols);
      offsets.push_back(off);
      off += t.rows();
    } else {
      for (int r = 0; r < rows; ++r)
        std::copy(t.data.begin() + static_cast<size_t>(r) * t.cols(),
                  t.data.begin() + static_cast<size_t>(r + 1) * t.cols(),
                  out.data.begin() + static_cast<size_t>(r) * total + off);
      offsets.push_back(off);
      off += t.cols();
    }
    rg = rg || node(v).requires_grad;
    ids.push_back(v.id);
  }
  int32_t io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ids, offsets, axis, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    for (size_t k = 0; k < ids.size(); ++k) {
      if (!nodes_[ids[k]].requires_grad) continue;
      Tensor<S>& g = grad_buf(ids[k]);
      if (axis == 0) {
        int cols = dC.cols();
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < cols; ++c) g.at(r, c) += dC.at(offsets[k] + r, c);
      } else {
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) g.at(r, c) += dC.at(r, offsets[k] + c);
      }
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::slice(Var a, int axis, int begin, int count) {
  check(a, "slice");
  if (axis != 0 && axis != 1) throw std::runtime_error("slice: axis must be 0 or 1");
  const Tensor<S>& A = node(a).val();
  int limit = axis == 0 ? A.rows() : A.cols();
  if (begin < 0 || count < 1 || begin + count > limit)
    throw std::runtime_error("slice: range [" + std::to_string(begin) + ", " +
                             std::to_string(begin + count) + ") out of bounds for " +
                             shape_str(A.shape));
  Tensor<S> out(axis == 0 ? Shape{count, A.cols()} : Shape{A.rows(), count});
  if (axis == 0) {
    std::copy(A.data.begin() + static_cast<size_t>(begin) * A.cols(),
              A.data.begin() + static_cast<size_t>(begin + count) * A.cols(), out.data.begin());
  } else {
    for (int r = 0; r < A.rows(); ++r)
      for (int c = 0; c < count; ++c) out.at(r, c) = A.at(r, begin + c);
  }
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io, axis, begin] {
    const Tensor<S>& dC = nodes_[io].grad;
    Tensor<S>& g = grad_buf(ia);
    if (axis == 0) {
      for (int r = 0; r < dC.rows(); ++r)
        for (int c = 0; c < dC.cols(); ++c) g.at(begin + r, c) += dC.at(r, c);
    } else {
      for (int r = 0; r < dC.rows(); ++r)
        for (int c = 0; c < dC.cols(); ++c) g.at(r, begin + c) += dC.at(r, c);
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::sum(Var a, int axis) {
  check(a, "sum");
  if (axis != 0 && axis != 1) throw std::runtime_error("sum: axis must be 0 or 1");
  const Tensor<S>& A = node(a).val();
  Tensor<S> out(axis == 0 ? Shape{1, A.cols()} : Shape{A.rows(), 1});
  for (int r = 0; r < A.rows(); ++r)
    for (int c = 0; c < A.cols(); ++c) {
      if (axis == 0)
        out.at(0, c) += A.at(r, c);
      else
        out.at(r, 0) += A.at(r, c);
    }
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io, axis] {
    const Tensor<S>& dC = nodes_[io].grad;
    Tensor<S>& g = grad_buf(ia);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) g.at(r, c) += axis == 0 ? dC.at(0, c) : dC.at(r, 0);
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::sum_all(Var a) {
  check(a, "sum_all");
  const Tensor<S>& A = node(a).val();
  S total = 0;
  for (S v : A.data) total += v;
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(Tensor<S>::scalar(total), node(a).requires_grad, [this, ia, io] {
    const S d = nodes_[io].grad.data[0];
    Tensor<S>& g = grad_buf(ia);
    for (auto& v : g.data) v += d;
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::sigmoid(Var a) {
  check(a, "sigmoid");
  Tensor<S> out = node(a).val();
  for (auto& v : out.data) v = stable_sigmoid(v);
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    const Tensor<S>& Y = nodes_[io].val();
    Tensor<S>& g = grad_buf(ia);
    for (int64_t i = 0; i < dC.size(); ++i)
      g.data[i] += dC.data[i] * Y.data[i] * (S(1) - Y.data[i]);
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::tanh(Var a) {
  check(a, "tanh");
  Tensor<S> out = node(a).val();
  for (auto& v : out.data) v = std::tanh(v);
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    const Tensor<S>& Y = nodes_[io].val();
    Tensor<S>& g = grad_buf(ia);
    for (int64_t i = 0; i < dC.size(); ++i)
      g.data[i] += dC.data[i] * (S(1) - Y.data[i] * Y.data[i]);
  });
}

template <class S>
double Tape<S>::min_relu_input_magnitude() const {
  double margin = std::numeric_limits<double>::infinity();
  for (int32_t id : relu_input_ids_)
    for (S v : nodes_[id].val().data) {
      double m = std::fabs(static_cast<double>(v));
      if (m < 1e6) margin = std::min(margin, m);
    }
  return margin;
}

template <class S>
typename Tape<S>::Var Tape<S>::relu(Var a) {
  check(a, "relu");
  relu_input_ids_.push_back(a.id);
  Tensor<S> out = node(a).val();
  for (auto& v : out.data) v = v > S(0) ? v : S(0);
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    const Tensor<S>& X = nodes_[ia].val();
    Tensor<S>& g = grad_buf(ia);
    for (int64_t i = 0; i < dC.size(); ++i)
      if (X.data[i] > S(0)) g.data[i] += dC.data[i];
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::log(Var a) {
  check(a, "log");
  Tensor<S> out = node(a).val();
  for (auto& v : out.data) v = std::log(v);
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    const Tensor<S>& X = nodes_[ia].val();
    Tensor<S>& g = grad_buf(ia);
    for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += dC.data[i] / X.data[i];
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::softmax_row(Var a) {
  check(a, "softmax_row");
  Tensor<S> out = node(a).val();
  const int rows = out.rows(), cols = out.cols();
  for (int r = 0; r < rows; ++r) {
    S* row = out.ptr() + static_cast<size_t>(r) * cols;
    S mx = row[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    S z = 0;
    for (int c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    for (int c = 0; c < cols; ++c) row[c] /= z;
  }
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    const Tensor<S>& Y = nodes_[io].val();
    Tensor<S>& g = grad_buf(ia);
    const int rows = Y.rows(), cols = Y.cols();
    for (int r = 0; r < rows; ++r) {
      S dot = 0;
      for (int c = 0; c < cols; ++c) dot += dC.at(r, c) * Y.at(r, c);
      for (int c = 0; c < cols; ++c) g.at(r, c) += Y.at(r, c) * (dC.at(r, c) - dot);
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::dropout(Var a, double rate, bool train, uint64_t mask_key) {
  check(a, "dropout");
  if (rate < 0.0 || rate >= 1.0) throw std::runtime_error("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) return a;  // exact identity
  Tensor<S> out = node(a).val();
  const S keep_scale = S(1.0 / (1.0 - rate));
  for (int64_t i = 0; i < out.size(); ++i) {
    bool keep = unit_at(mask_key, static_cast<uint64_t>(i)) >= rate;
    out.data[i] = keep ? out.data[i] * keep_scale : S(0);
  }
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io, rate, mask_key, keep_scale] {
    const Tensor<S>& dC = nodes_[io].grad;
    Tensor<S>& g = grad_buf(ia);
    for (int64_t i = 0; i < dC.size(); ++i) {
      bool keep = unit_at(mask_key, static_cast<uint64_t>(i)) >= rate;
      if (keep) g.data[i] += dC.data[i] * keep_scale;
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::reshape(Var a, int rows, int cols) {
  check(a, "reshape");
  const Tensor<S>& A = node(a).val();
  if (static_cast<int64_t>(rows) * cols != A.size())
    throw ShapeError("reshape: cannot view " + shape_str(A.shape) + " as [" +
                     std::to_string(rows) + "x" + std::to_string(cols) + "]");
  Tensor<S> out({rows, cols});
  out.data = A.data;
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io] {
    const Tensor<S>& dC = nodes_[io].grad;
    Tensor<S>& g = grad_buf(ia);
    for (int64_t i = 0; i < dC.size(); ++i) g.data[i] += dC.data[i];
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::gather_rows(Var a, std::vector<int> idx) {
  check(a, "gather_rows");
  const Tensor<S>& A = node(a).val();
  for (int i : idx)
    if (i < 0 || i >= A.rows())
      throw std::runtime_error("gather_rows: index " + std::to_string(i) + " out of range for " +
                               shape_str(A.shape));
  Tensor<S> out({static_cast<int>(idx.size()), A.cols()});
  for (size_t k = 0; k < idx.size(); ++k)
    std::copy(A.data.begin() + static_cast<size_t>(idx[k]) * A.cols(),
              A.data.begin() + static_cast<size_t>(idx[k] + 1) * A.cols(),
              out.data.begin() + k * A.cols());
  int32_t ia = a.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), node(a).requires_grad, [this, ia, io, idx = std::move(idx)] {
    const Tensor<S>& dC = nodes_[io].grad;
    Tensor<S>& g = grad_buf(ia);
    const int cols = dC.cols();
    for (size_t k = 0; k < idx.size(); ++k)
      for (int c = 0; c < cols; ++c) g.at(idx[k], c) += dC.at(static_cast<int>(k), c);
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::row_replace(Var base, std::vector<int> idx, Var rows) {
  check(base, "row_replace");
  check(rows, "row_replace");
  const Tensor<S>& B = node(base).val();
  const Tensor<S>& R = node(rows).val();
  if (R.cols() != B.cols() || R.rows() != static_cast<int>(idx.size()))
    shape_fail("row_replace", B, R);
  std::unordered_set<int> seen;
  for (int i : idx) {
    if (i < 0 || i >= B.rows())
      throw std::runtime_error("row_replace: index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second)
      throw std::runtime_error("row_replace: duplicate index " + std::to_string(i));
  }
  Tensor<S> out = B;
  for (size_t k = 0; k < idx.size(); ++k)
    std::copy(R.data.begin() + k * R.cols(), R.data.begin() + (k + 1) * R.cols(),
              out.data.begin() + static_cast<size_t>(idx[k]) * B.cols());
  bool rg = node(base).requires_grad || node(rows).requires_grad;
  int32_t ib = base.id, ir = rows.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg, [this, ib, ir, io, idx = std::move(idx)] {
    const Tensor<S>& dC = nodes_[io].grad;
    const int cols = dC.cols();
    if (nodes_[ir].requires_grad) {
      Tensor<S>& g = grad_buf(ir);
      for (size_t k = 0; k < idx.size(); ++k)
        for (int c = 0; c < cols; ++c) g.at(static_cast<int>(k), c) += dC.at(idx[k], c);
    }
    if (nodes_[ib].requires_grad) {
      Tensor<S>& g = grad_buf(ib);
      std::vector<char> replaced(dC.rows(), 0);
      for (int i : idx) replaced[i] = 1;
      for (int r = 0; r < dC.rows(); ++r) {
        if (replaced[r]) continue;
        for (int c = 0; c < cols; ++c) g.at(r, c) += dC.at(r, c);
      }
    }
  });
}

template <class S>
typename Tape<S>::Var Tape<S>::span_attend(Var scores, Var values,
                                           std::vector<std::pair<int, int>> ranges) {
  check(scores, "span_attend");
  check(values, "span_attend");
  const Tensor<S>& Sc = node(scores).val();
  const Tensor<S>& V = node(values).val();
  if (Sc.cols() != 1 || Sc.rows() != V.rows()) shape_fail("span_attend", Sc, V);
  for (auto [s, e] : ranges)
    if (s < 0 || e < s || e >= V.rows())
      throw std::runtime_error("span_attend: bad range [" + std::to_string(s) + ", " +
                               std::to_string(e) + "] for " + shape_str(V.shape));
  const int cols = V.cols();
  Tensor<S> out({static_cast<int>(ranges.size()), cols});
  std::vector<S> alphas;  // flattened softmax weights, per range
  for (size_t k = 0; k < ranges.size(); ++k) {
    auto [s, e] = ranges[k];
    S mx = Sc.at(s, 0);
    for (int t = s + 1; t <= e; ++t) mx = std::max(mx, Sc.at(t, 0));
    S z = 0;
    size_t base = alphas.size();
    for (int t = s; t <= e; ++t) {
      S a = std::exp(Sc.at(t, 0) - mx);
      alphas.push_back(a);
      z += a;
    }
    for (int t = s; t <= e; ++t) {
      S a = alphas[base + (t - s)] / z;
      alphas[base + (t - s)] = a;
      for (int c = 0; c < cols; ++c) out.at(static_cast<int>(k), c) += a * V.at(t, c);
    }
  }
  bool rg = node(scores).requires_grad || node(values).requires_grad;
  int32_t is = scores.id, iv = values.id, io = static_cast<int32_t>(nodes_.size());
  return emit(std::move(out), rg,
              [this, is, iv, io, ranges = std::move(ranges), alphas = std::move(alphas)] {
                const Tensor<S>& dC = nodes_[io].grad;
                const Tensor<S>& V = nodes_[iv].val();
                const int cols = V.cols();
                const bool need_s = nodes_[is].requires_grad;
                const bool need_v = nodes_[iv].requires_grad;
                size_t base = 0;
                for (size_t k = 0; k < ranges.size(); ++k) {
                  auto [s, e] = ranges[k];
                  const int w = e - s + 1;
                  // d alpha_t = dOut . v_t ; d score_t = alpha_t (dalpha_t - sum_j alpha_j dalpha_j)
                  std::vector<S> dalpha(w, S(0));
                  for (int t = 0; t < w; ++t)
                    for (int c = 0; c < cols; ++c)
                      dalpha[t] += dC.at(static_cast<int>(k), c) * V.at(s + t, c);
                  if (need_v) {
                    Tensor<S>& gv = grad_buf(iv);
                    for (int t = 0; t < w; ++t)
                      for (int c = 0; c < cols; ++c)
                        gv.at(s + t, c) += alphas[base + t] * dC.at(static_cast<int>(k), c);
                  }
                  if (need_s) {
                    Tensor<S>& gs = grad_buf(is);
                    S dot = 0;
                    for (int t = 0; t < w; ++t) dot += alphas[base + t] * dalpha[t];
                    for (int t = 0; t < w; ++t)
                      gs.at(s + t, 0) += alphas[base + t] * (dalpha[t] - dot);
                  }
                  base += static_cast<size_t>(w);
                }
              });
}

template class Tape<float>;
template class Tape<double>;

}  // namespace dygie::numeric
