#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tsm {

// Dense row-major float32 array. Frames and feature maps are [C, H, W];
// token fields are [N, C]; selected tokens are [N, s, C].
class Tensor {
 public:
  using Dims = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Dims dims, float fill = 0.0f);
  Tensor(Dims dims, std::vector<float> data);

  static Tensor zeros(Dims dims) { return Tensor(std::move(dims)); }

  const Dims& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  float at(std::size_t i, std::size_t j) const {
    return data_[i * dims_[1] + j];
  }
  float& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  float at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  // Same data, new dims; product must match.
  Tensor reshaped(Dims dims) const;

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  Dims dims_;
  std::vector<float> data_;
};

std::size_t product(const Tensor::Dims& dims);
std::string dims_string(const Tensor::Dims& dims);

// Throws std::invalid_argument unless t has the given rank.
void require_rank(const Tensor& t, std::size_t rank, const char* what);
void require_same_dims(const Tensor& a, const Tensor& b, const char* what);

float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace tsm
