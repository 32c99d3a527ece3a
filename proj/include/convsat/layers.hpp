#pragma once
// Graph builders on top of Tape: fused-gate LSTM cell, bidirectional
// last-state encoder, attention pooling over feature rows, linear head.
// Parameter naming is positional ("<prefix>.Wx" etc.) so initialization,
// forward passes and serialization all agree.

#include <cmath>
#include <string>
#include <vector>

#include "convsat/autodiff.hpp"
#include "convsat/param_store.hpp"

namespace convsat {

// Gate order inside the fused 4H rows: input, forget, candidate, output.
template <typename T, typename Rng>
void init_lstm(ParamStore<T>& store, const std::string& prefix, std::size_t input_dim,
               std::size_t hidden_dim, Rng& rng) {
  auto& wx = store.add(prefix + ".Wx", {4 * hidden_dim, input_dim});
  fill_uniform(wx, static_cast<T>(1.0 / std::sqrt(static_cast<double>(input_dim))), rng);
  auto& wh = store.add(prefix + ".Wh", {4 * hidden_dim, hidden_dim});
  fill_uniform(wh, static_cast<T>(1.0 / std::sqrt(static_cast<double>(hidden_dim))), rng);
  auto& b = store.add(prefix + ".b", {4 * hidden_dim});
  // forget-gate bias 1 keeps early memory open; everything else starts at 0
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) b[i] = T(1);
}

template <typename T, typename Rng>
void init_linear(ParamStore<T>& store, const std::string& prefix, std::size_t input_dim,
                 std::size_t output_dim, Rng& rng) {
  auto& w = store.add(prefix + ".W", {output_dim, input_dim});
  fill_uniform(w, static_cast<T>(1.0 / std::sqrt(static_cast<double>(input_dim))), rng);
  store.add(prefix + ".b", {output_dim});
}

template <typename T, typename Rng>
void init_attention(ParamStore<T>& store, const std::string& prefix, std::size_t dim, Rng& rng) {
  const T k = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dim)));
  fill_uniform(store.add(prefix + ".M", {dim, dim}), k, rng);
  fill_uniform(store.add(prefix + ".c", {dim}), k, rng);
  fill_uniform(store.add(prefix + ".b", {dim}), k, rng);
}

template <typename T, typename Rng>
void init_embedding(ParamStore<T>& store, const std::string& name, std::size_t rows,
                    std::size_t dim, Rng& rng) {
  fill_uniform(store.add(name, {rows, dim}),
               static_cast<T>(1.0 / std::sqrt(static_cast<double>(dim))), rng);
}

struct LstmStep {
  int h = -1;
  int c = -1;
};

template <typename T>
LstmStep lstm_cell(Tape<T>& tape, const std::string& prefix, std::size_t hidden, int x, int h,
                   int c) {
  int pre = tape.add3(tape.matvec(prefix + ".Wx", x), tape.matvec(prefix + ".Wh", h),
                      tape.param_vector(prefix + ".b"));
  int gi = tape.sigmoid_node(tape.slice(pre, 0, hidden));
  int gf = tape.sigmoid_node(tape.slice(pre, hidden, hidden));
  int gc = tape.tanh_node(tape.slice(pre, 2 * hidden, hidden));
  int go = tape.sigmoid_node(tape.slice(pre, 3 * hidden, hidden));
  int c_next = tape.add(tape.mul(gf, c), tape.mul(gi, gc));
  int h_next = tape.mul(go, tape.tanh_node(c_next));
  return {h_next, c_next};
}

// Runs the cell over xs from zero state and returns the last hidden node.
template <typename T>
int lstm_last(Tape<T>& tape, const std::string& prefix, std::size_t hidden,
              const std::vector<int>& xs) {
  if (xs.empty()) throw std::invalid_argument(prefix + ": empty input sequence");
  int h = tape.input(std::vector<T>(hidden, T(0)));
  int c = tape.input(std::vector<T>(hidden, T(0)));
  for (int x : xs) {
    LstmStep s = lstm_cell(tape, prefix, hidden, x, h, c);
    h = s.h;
    c = s.c;
  }
  return h;
}

// concat(forward pass last h, reversed pass last h): dim 2 * hidden.
template <typename T>
int bilstm_last(Tape<T>& tape, const std::string& fwd_prefix, const std::string& bwd_prefix,
                std::size_t hidden, const std::vector<int>& xs) {
  std::vector<int> rev(xs.rbegin(), xs.rend());
  int hf = lstm_last(tape, fwd_prefix, hidden, xs);
  int hb = lstm_last(tape, bwd_prefix, hidden, rev);
  return tape.concat({hf, hb});
}

struct AttentionNodes {
  int attended = -1;
  int weights = -1;
};

// rows are the scaled feature vectors of the context window, oldest first:
//   s_i = tanh(M^T v_i + b),  alpha = softmax_i(s_i . c),  out = sum alpha_i v_i
// The bias b is shared across rows.
template <typename T>
AttentionNodes feature_attention(Tape<T>& tape, const std::string& prefix,
                                 const std::vector<int>& rows) {
  if (rows.empty()) throw std::invalid_argument(prefix + ": attention needs at least one row");
  std::vector<int> scores;
  scores.reserve(rows.size());
  for (int v : rows) {
    int b = tape.param_vector(prefix + ".b");
    int s = tape.tanh_node(tape.add(tape.matvec_t(prefix + ".M", v), b));
    scores.push_back(tape.dot(s, tape.param_vector(prefix + ".c")));
  }
  int alpha = tape.softmax(tape.concat(scores));
  return {tape.weighted_sum(alpha, rows), alpha};
}

template <typename T>
int linear(Tape<T>& tape, const std::string& prefix, int x) {
  return tape.add(tape.matvec(prefix + ".W", x), tape.param_vector(prefix + ".b"));
}

}  // namespace convsat
