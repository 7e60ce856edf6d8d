#include "dygie/numeric/tensor.hpp"

#include <sstream>

namespace dygie::numeric {

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

template <class S>
Tensor<S>::Tensor(Shape sh, std::vector<S> values) : shape(std::move(sh)), data(std::move(values)) {
  if (numel(shape) != static_cast<int64_t>(data.size()))
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  for (int d : shape)
    if (d < 1) throw ShapeError("tensor: dimension < 1 in " + shape_str(shape));
}

template <class S>
Tensor<S> Tensor<S>::row(std::vector<S> values) {
  int n = static_cast<int>(values.size());
  return Tensor({1, n}, std::move(values));
}

template <class S>
Tensor<S> Tensor<S>::matrix(int rows, int cols, std::vector<S> values) {
  return Tensor({rows, cols}, std::move(values));
}

template <class S>
Tensor<S> Tensor<S>::fill(int rows, int cols, S v) {
  Tensor t({rows, cols});
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

template struct Tensor<float>;
template struct Tensor<double>;

}  // namespace dygie::numeric
