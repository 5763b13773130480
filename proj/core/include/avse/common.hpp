// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Shared plumbing: the Tensor container and error helpers.
#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace avse {

// Dense row-major float tensor (last index fastest). Shape extents are >= 1
// and product(shape) == data.size() is maintained by the factory functions.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

  static Tensor zeros(std::vector<int> shape) {
    std::size_t n = 1;
    for (int e : shape) {
      if (e < 1) throw std::invalid_argument("tensor extents must be >= 1");
      n *= static_cast<std::size_t>(e);
    }
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(n, 0.0f);
    return t;
  }

  std::size_t numel() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }
};

// Contract violation: the caller broke a documented precondition.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Data/environment problem: bad file, malformed payload, missing resource.
inline void require_data(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

}  // namespace avse
