#pragma once

// Dense row-major tensors. Everything in the model is rank 2 in practice
// (scalars are 1x1, vectors 1xn); higher-rank data such as the per-sentence
// relation score tensor is stored as a (b*b) x L matrix with a documented
// row layout.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dygie::numeric {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class S>
struct Tensor {
  Shape shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(Shape sh) : shape(std::move(sh)), data(numel(shape), S(0)) {}
  Tensor(Shape sh, std::vector<S> values);

  static Tensor zeros(int rows, int cols) { return Tensor({rows, cols}); }
  static Tensor scalar(S v) { return Tensor({1, 1}, {v}); }
  static Tensor row(std::vector<S> values);
  static Tensor matrix(int rows, int cols, std::vector<S> values);
  static Tensor fill(int rows, int cols, S v);

  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  int64_t size() const { return static_cast<int64_t>(data.size()); }
  bool is_scalar() const { return size() == 1; }

  S& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  S at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }
  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }

  template <class T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

template <class S>
bool same_shape(const Tensor<S>& a, const Tensor<S>& b) {
  return a.shape == b.shape;
}

extern template struct Tensor<float>;
extern template struct Tensor<double>;

}  // namespace dygie::numeric
