#include "syncforge/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "syncforge/errors.hpp"

namespace syncforge::nn {

namespace {
std::size_t count(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw InvalidInput("tensor rank must be 1..4, got shape " + shape_str(shape));
  }
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw InvalidInput("tensor dimensions must be positive: " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(count(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (count(shape_) != data_.size()) {
    throw InvalidInput("tensor data size does not match shape " + shape_str(shape_));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor stack(const std::vector<Image>& images) {
  if (images.empty()) throw InvalidInput("stack: no images");
  const Image& f = images.front();
  Tensor t({static_cast<int>(images.size()), f.channels(), f.height(), f.width()});
  std::size_t off = 0;
  for (const auto& img : images) {
    if (!img.same_shape(f)) throw InvalidInput("stack: images differ in shape");
    std::copy(img.data().begin(), img.data().end(), t.data().begin() + off);
    off += img.size();
  }
  return t;
}

Image unstack(const Tensor& t, int n) {
  if (t.rank() != 4) throw InvalidInput("unstack: expected a 4-d tensor");
  Image img(t.dim(1), t.dim(2), t.dim(3));
  const std::size_t per = img.size();
  std::copy(t.data().begin() + n * per, t.data().begin() + (n + 1) * per, img.data().begin());
  return img;
}

}  // namespace syncforge::nn
