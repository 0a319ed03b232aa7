#include "tsm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tsm {

std::size_t product(const Tensor::Dims& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

std::string dims_string(const Tensor::Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ", ";
    os << dims[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Dims dims, float fill) : dims_(std::move(dims)) {
  for (std::size_t d : dims_) {
    if (d == 0) throw std::invalid_argument("tensor dims must be positive");
  }
  data_.assign(product(dims_), fill);
}

Tensor::Tensor(Dims dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  for (std::size_t d : dims_) {
    if (d == 0) throw std::invalid_argument("tensor dims must be positive");
  }
  if (data_.size() != product(dims_)) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match dims " + dims_string(dims_));
  }
}

Tensor Tensor::reshaped(Dims dims) const {
  if (product(dims) != data_.size()) {
    throw std::invalid_argument("cannot reshape " + dims_string(dims_) +
                                " to " + dims_string(dims));
  }
  return Tensor(std::move(dims), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(what) + ": expected rank " +
                                std::to_string(rank) + ", got " +
                                dims_string(t.dims()));
  }
}

void require_same_dims(const Tensor& a, const Tensor& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw std::invalid_argument(std::string(what) + ": dims mismatch " +
                                dims_string(a.dims()) + " vs " +
                                dims_string(b.dims()));
  }
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "max_abs_diff");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a[i] - b[i]));
  }
  return m;
}

}  // namespace tsm
