#pragma once
// Dense row-major tensors, just enough for this model family: 1-D and 2-D
// shapes, deterministic random init, no views, no broadcasting.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace convsat {

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel(shape), T(0));
  }

  static std::size_t numel(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  T& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Uniform draw in [0, 1) built directly from a 64-bit engine output; avoids
// std::uniform_real_distribution, whose mapping is implementation-defined.
template <typename T, typename Rng>
T uniform_unit(Rng& rng) {
  return static_cast<T>(rng() >> 11) * static_cast<T>(1.0 / 9007199254740992.0);  // 2^53
}

template <typename T, typename Rng>
void fill_uniform(Tensor<T>& t, T half_range, Rng& rng) {
  for (T& v : t.data) v = (T(2) * uniform_unit<T>(rng) - T(1)) * half_range;
}

}  // namespace convsat
