#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "syncforge/image.hpp"

namespace syncforge::nn {

/// Dense row-major tensor of doubles, up to 4 dimensions (N, C, H, W).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  const std::vector<int>& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }
  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  double at(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<int>& shape);

/// Stack same-shaped images into an [N, C, H, W] tensor.
Tensor stack(const std::vector<Image>& images);
/// Extract sample n of an [N, C, H, W] tensor as an image.
Image unstack(const Tensor& t, int n);

}  // namespace syncforge::nn
