#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace relab {

using Scalar = double;
// Row-major so a batch row is a contiguous HWC image.
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Dense row-major value container with an explicit shape.
struct Tensor {
  std::vector<int> shape;
  Vector data;

  Tensor() = default;
  Tensor(std::vector<int> s, Vector d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<Eigen::Index>(size()) != data.size())
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  bool all_finite() const { return data.allFinite(); }
};

}  // namespace relab
