#pragma once
// Reverse-mode automatic differentiation on a flat tape of vector-valued
// nodes. A Tape borrows an immutable ParamStore for weights and, when given
// a gradient store, accumulates parameter gradients during backward(). The
// op set is exactly what the model needs; nothing more general.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "convsat/param_store.hpp"
#include "convsat/tensor.hpp"

namespace convsat {

inline constexpr double kProbClamp = 1e-12;

template <typename T>
class Tape {
 public:
  using Vec = std::vector<T>;

  explicit Tape(const ParamStore<T>& params, ParamStore<T>* grads = nullptr)
      : params_(params), grads_(grads) {}

  std::size_t size() const { return nodes_.size(); }
  const Vec& value(int node) const { return nodes_[check(node)].value; }
  const Vec& grad(int node) const { return nodes_[check(node)].grad; }

  int input(Vec v) { return push(std::move(v), {}); }

  int param_vector(const std::string& name) {
    const Tensor<T>* t = &params_.get(name);
    if (t->shape.size() != 1) fail(name + " is not a vector parameter");
    Tensor<T>* g = grad_tensor(name);
    int out = push(Vec(t->data.begin(), t->data.end()), {});
    if (g)
      nodes_[out].backward = [this, out, g] {
        const Vec& go = nodes_[out].grad;
        for (std::size_t i = 0; i < go.size(); ++i) g->data[i] += go[i];
      };
    return out;
  }

  int embed(const std::string& table, std::size_t row) {
    const Tensor<T>* t = &params_.get(table);
    if (t->shape.size() != 2 || row >= t->rows())
      fail("embedding row " + std::to_string(row) + " out of range in " + table);
    const std::size_t d = t->cols();
    Vec v(t->data.begin() + row * d, t->data.begin() + (row + 1) * d);
    Tensor<T>* g = grad_tensor(table);
    int out = push(std::move(v), {});
    if (g)
      nodes_[out].backward = [this, out, g, row, d] {
        const Vec& go = nodes_[out].grad;
        for (std::size_t i = 0; i < d; ++i) g->data[row * d + i] += go[i];
      };
    return out;
  }

  // y = W x
  int matvec(const std::string& name, int x) {
    const Tensor<T>* w = &params_.get(name);
    const Vec& xv = nodes_[check(x)].value;
    if (w->shape.size() != 2 || w->cols() != xv.size())
      fail(name + ": matvec dim mismatch (" + shape_str(*w) + " vs " +
           std::to_string(xv.size()) + ")");
    const std::size_t m = w->rows(), n = w->cols();
    Vec y(m, T(0));
    for (std::size_t i = 0; i < m; ++i) {
      T acc = 0;
      const T* row = w->data.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * xv[j];
      y[i] = acc;
    }
    Tensor<T>* g = grad_tensor(name);
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, w, g, x, m, n] {
      const Vec& go = nodes_[out].grad;
      const Vec& xv2 = nodes_[x].value;
      Vec& gx = nodes_[x].grad;
      for (std::size_t i = 0; i < m; ++i) {
        const T gi = go[i];
        const T* row = w->data.data() + i * n;
        if (g) {
          T* grow = g->data.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) grow[j] += gi * xv2[j];
        }
        for (std::size_t j = 0; j < n; ++j) gx[j] += gi * row[j];
      }
    };
    return out;
  }

  // y = W^T x
  int matvec_t(const std::string& name, int x) {
    const Tensor<T>* w = &params_.get(name);
    const Vec& xv = nodes_[check(x)].value;
    if (w->shape.size() != 2 || w->rows() != xv.size())
      fail(name + ": transposed matvec dim mismatch (" + shape_str(*w) + " vs " +
           std::to_string(xv.size()) + ")");
    const std::size_t m = w->rows(), n = w->cols();
    Vec y(n, T(0));
    for (std::size_t k = 0; k < m; ++k) {
      const T xk = xv[k];
      const T* row = w->data.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) y[j] += xk * row[j];
    }
    Tensor<T>* g = grad_tensor(name);
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, w, g, x, m, n] {
      const Vec& go = nodes_[out].grad;
      const Vec& xv2 = nodes_[x].value;
      Vec& gx = nodes_[x].grad;
      for (std::size_t k = 0; k < m; ++k) {
        const T* row = w->data.data() + k * n;
        T acc = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (g) g->data[k * n + j] += xv2[k] * go[j];
          acc += row[j] * go[j];
        }
        gx[k] += acc;
      }
    };
    return out;
  }

  int add(int a, int b) {
    const Vec& av = nodes_[check(a)].value;
    const Vec& bv = nodes_[check(b)].value;
    if (av.size() != bv.size()) fail("add: size mismatch");
    Vec y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a, b] {
      const Vec& go = nodes_[out].grad;
      for (std::size_t i = 0; i < go.size(); ++i) {
        nodes_[a].grad[i] += go[i];
        nodes_[b].grad[i] += go[i];
      }
    };
    return out;
  }

  int add3(int a, int b, int c) { return add(add(a, b), c); }

  int mul(int a, int b) {
    const Vec& av = nodes_[check(a)].value;
    const Vec& bv = nodes_[check(b)].value;
    if (av.size() != bv.size()) fail("mul: size mismatch");
    Vec y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a, b] {
      const Vec& go = nodes_[out].grad;
      for (std::size_t i = 0; i < go.size(); ++i) {
        nodes_[a].grad[i] += go[i] * nodes_[b].value[i];
        nodes_[b].grad[i] += go[i] * nodes_[a].value[i];
      }
    };
    return out;
  }

  int tanh_node(int a) {
    Vec y = nodes_[check(a)].value;
    for (T& v : y) v = std::tanh(v);
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a] {
      const Vec& go = nodes_[out].grad;
      const Vec& yv = nodes_[out].value;
      for (std::size_t i = 0; i < go.size(); ++i)
        nodes_[a].grad[i] += go[i] * (T(1) - yv[i] * yv[i]);
    };
    return out;
  }

  int sigmoid_node(int a) {
    Vec y = nodes_[check(a)].value;
    for (T& v : y) v = T(1) / (T(1) + std::exp(-v));
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a] {
      const Vec& go = nodes_[out].grad;
      const Vec& yv = nodes_[out].value;
      for (std::size_t i = 0; i < go.size(); ++i)
        nodes_[a].grad[i] += go[i] * yv[i] * (T(1) - yv[i]);
    };
    return out;
  }

  int slice(int a, std::size_t offset, std::size_t len) {
    const Vec& av = nodes_[check(a)].value;
    if (offset + len > av.size()) fail("slice out of range");
    Vec y(av.begin() + offset, av.begin() + offset + len);
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a, offset, len] {
      const Vec& go = nodes_[out].grad;
      for (std::size_t i = 0; i < len; ++i) nodes_[a].grad[offset + i] += go[i];
    };
    return out;
  }

  int concat(const std::vector<int>& parts) {
    if (parts.empty()) fail("concat: no parts");
    Vec y;
    for (int p : parts) {
      const Vec& pv = nodes_[check(p)].value;
      y.insert(y.end(), pv.begin(), pv.end());
    }
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, parts] {
      const Vec& go = nodes_[out].grad;
      std::size_t off = 0;
      for (int p : parts) {
        Vec& gp = nodes_[p].grad;
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += go[off + i];
        off += gp.size();
      }
    };
    return out;
  }

  int dot(int a, int b) {
    const Vec& av = nodes_[check(a)].value;
    const Vec& bv = nodes_[check(b)].value;
    if (av.size() != bv.size()) fail("dot: size mismatch");
    T acc = 0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
    int out = push(Vec{acc}, {});
    nodes_[out].backward = [this, out, a, b] {
      const T g0 = nodes_[out].grad[0];
      for (std::size_t i = 0; i < nodes_[a].value.size(); ++i) {
        nodes_[a].grad[i] += g0 * nodes_[b].value[i];
        nodes_[b].grad[i] += g0 * nodes_[a].value[i];
      }
    };
    return out;
  }

  // Numerically stable softmax over the whole node.
  int softmax(int a) {
    const Vec& av = nodes_[check(a)].value;
    if (av.empty()) fail("softmax: empty input");
    T mx = av[0];
    for (T v : av) mx = std::max(mx, v);
    Vec y(av.size());
    T z = 0;
    for (std::size_t i = 0; i < av.size(); ++i) {
      y[i] = std::exp(av[i] - mx);
      z += y[i];
    }
    for (T& v : y) v /= z;
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a] {
      const Vec& go = nodes_[out].grad;
      const Vec& yv = nodes_[out].value;
      T inner = 0;
      for (std::size_t i = 0; i < go.size(); ++i) inner += go[i] * yv[i];
      for (std::size_t i = 0; i < go.size(); ++i)
        nodes_[a].grad[i] += yv[i] * (go[i] - inner);
    };
    return out;
  }

  // y = sum_i weights[i] * rows[i]; weights is a node of length rows.size().
  int weighted_sum(int weights, const std::vector<int>& rows) {
    const Vec& wv = nodes_[check(weights)].value;
    if (wv.size() != rows.size()) fail("weighted_sum: weight/row count mismatch");
    if (rows.empty()) fail("weighted_sum: no rows");
    const std::size_t d = nodes_[check(rows[0])].value.size();
    Vec y(d, T(0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Vec& rv = nodes_[check(rows[i])].value;
      if (rv.size() != d) fail("weighted_sum: ragged rows");
      for (std::size_t j = 0; j < d; ++j) y[j] += wv[i] * rv[j];
    }
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, weights, rows] {
      const Vec& go = nodes_[out].grad;
      const Vec& wv2 = nodes_[weights].value;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Vec& rv = nodes_[rows[i]].value;
        Vec& gr = nodes_[rows[i]].grad;
        T acc = 0;
        for (std::size_t j = 0; j < go.size(); ++j) {
          acc += go[j] * rv[j];
          gr[j] += go[j] * wv2[i];
        }
        nodes_[weights].grad[i] += acc;
      }
    };
    return out;
  }

  // Inverted dropout; call only in training mode. p = 0 is the identity.
  int dropout(int a, T p, std::mt19937_64& rng) {
    if (p < T(0) || p >= T(1)) fail("dropout rate must be in [0, 1)");
    if (p == T(0)) return a;
    const Vec& av = nodes_[check(a)].value;
    std::vector<T> mask(av.size());
    const T scale = T(1) / (T(1) - p);
    for (std::size_t i = 0; i < mask.size(); ++i)
      mask[i] = uniform_unit<T>(rng) >= p ? scale : T(0);
    Vec y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * mask[i];
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a, mask = std::move(mask)] {
      const Vec& go = nodes_[out].grad;
      for (std::size_t i = 0; i < go.size(); ++i) nodes_[a].grad[i] += go[i] * mask[i];
    };
    return out;
  }

  // -log(max(probs[index], clamp))
  int pick_neg_log(int probs, std::size_t index) {
    const Vec& pv = nodes_[check(probs)].value;
    if (index >= pv.size()) fail("pick_neg_log: index out of range");
    const T clamped = std::max(pv[index], static_cast<T>(kProbClamp));
    int out = push(Vec{-std::log(clamped)}, {});
    nodes_[out].backward = [this, out, probs, index, clamped] {
      nodes_[probs].grad[index] += nodes_[out].grad[0] * (T(-1) / clamped);
    };
    return out;
  }

  // Binary cross-entropy of a scalar probability node against gold in {0, 1}.
  int bce(int p, int gold) {
    const Vec& pv = nodes_[check(p)].value;
    if (pv.size() != 1) fail("bce: probability node must be scalar");
    if (gold != 0 && gold != 1) fail("bce: gold must be 0 or 1");
    const T cp = std::max(pv[0], static_cast<T>(kProbClamp));
    const T cq = std::max(T(1) - pv[0], static_cast<T>(kProbClamp));
    const T loss = gold == 1 ? -std::log(cp) : -std::log(cq);
    int out = push(Vec{loss}, {});
    nodes_[out].backward = [this, out, p, gold, cp, cq] {
      const T g0 = nodes_[out].grad[0];
      nodes_[p].grad[0] += gold == 1 ? g0 * (T(-1) / cp) : g0 * (T(1) / cq);
    };
    return out;
  }

  int sum(const std::vector<int>& scalars) {
    if (scalars.empty()) fail("sum: no terms");
    T acc = 0;
    for (int s : scalars) {
      const Vec& sv = nodes_[check(s)].value;
      if (sv.size() != 1) fail("sum: non-scalar term");
      acc += sv[0];
    }
    int out = push(Vec{acc}, {});
    nodes_[out].backward = [this, out, scalars] {
      for (int s : scalars) nodes_[s].grad[0] += nodes_[out].grad[0];
    };
    return out;
  }

  int scale(int a, T factor) {
    Vec y = nodes_[check(a)].value;
    for (T& v : y) v *= factor;
    int out = push(std::move(y), {});
    nodes_[out].backward = [this, out, a, factor] {
      const Vec& go = nodes_[out].grad;
      for (std::size_t i = 0; i < go.size(); ++i) nodes_[a].grad[i] += go[i] * factor;
    };
    return out;
  }

  void backward(int root, T seed = T(1)) {
    if (nodes_.empty()) throw std::logic_error("backward called on an empty tape");
    if (backward_done_) throw std::logic_error("backward already run on this tape");
    check(root);
    backward_done_ = true;
    Vec& g = nodes_[root].grad;
    for (T& v : g) v += seed;
    for (int i = root; i >= 0; --i)
      if (nodes_[i].backward) nodes_[i].backward();
  }

 private:
  struct Node {
    Vec value;
    Vec grad;
    std::function<void()> backward;
  };

  [[noreturn]] static void fail(const std::string& msg) { throw std::invalid_argument(msg); }

  static std::string shape_str(const Tensor<T>& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.shape.size(); ++i)
      s += (i ? "x" : "") + std::to_string(t.shape[i]);
    return s + "]";
  }

  int check(int node) const {
    if (node < 0 || node >= static_cast<int>(nodes_.size()))
      throw std::logic_error("tape node " + std::to_string(node) + " does not exist");
    return node;
  }

  Tensor<T>* grad_tensor(const std::string& name) {
    return grads_ && grads_->contains(name) ? &grads_->get(name) : nullptr;
  }

  int push(Vec value, std::function<void()> backward) {
    Node n;
    n.grad.assign(value.size(), T(0));
    n.value = std::move(value);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const ParamStore<T>& params_;
  ParamStore<T>* grads_;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace convsat
