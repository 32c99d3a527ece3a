#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "convsat/adam.hpp"
#include "convsat/autodiff.hpp"
#include "convsat/layers.hpp"
#include "convsat/param_store.hpp"
#include "test_support.hpp"

using namespace convsat;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> rand_vec(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * uniform_unit<double>(rng) - 1.0;
  return v;
}

// Straight-line LSTM gate equations reading the fused parameter layout.
std::vector<double> lstm_oracle(const ParamStore<double>& p, const std::string& prefix,
                                std::size_t H, const std::vector<double>& x,
                                const std::vector<double>& h, const std::vector<double>& c,
                                std::vector<double>* c_out = nullptr) {
  const Tensor<double>& Wx = p.get(prefix + ".Wx");
  const Tensor<double>& Wh = p.get(prefix + ".Wh");
  const Tensor<double>& b = p.get(prefix + ".b");
  std::vector<double> pre(4 * H, 0.0);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double acc = b.data[r];
    for (std::size_t k = 0; k < x.size(); ++k) acc += Wx.at(r, k) * x[k];
    for (std::size_t k = 0; k < H; ++k) acc += Wh.at(r, k) * h[k];
    pre[r] = acc;
  }
  std::vector<double> hn(H), cn(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double gi = sigmoid(pre[j]);
    const double gf = sigmoid(pre[H + j]);
    const double gc = std::tanh(pre[2 * H + j]);
    const double go = sigmoid(pre[3 * H + j]);
    cn[j] = gf * c[j] + gi * gc;
    hn[j] = go * std::tanh(cn[j]);
  }
  if (c_out) *c_out = cn;
  return hn;
}

}  // namespace

TEST_CASE("lstm cell matches the gate-equation oracle") {
  std::mt19937_64 rng(11);
  const std::size_t D = 5, H = 4;
  ParamStore<double> params;
  init_lstm(params, "cell", D, H, rng);
  const auto x = rand_vec(D, rng), h0 = rand_vec(H, rng), c0 = rand_vec(H, rng);

  Tape<double> tape(params);
  LstmStep s = lstm_cell(tape, "cell", H, tape.input(x), tape.input(h0), tape.input(c0));
  std::vector<double> c_ref;
  const auto h_ref = lstm_oracle(params, "cell", H, x, h0, c0, &c_ref);
  REQUIRE(tape.value(s.h).size() == H);
  for (std::size_t j = 0; j < H; ++j) {
    CHECK(tape.value(s.h)[j] == doctest::Approx(h_ref[j]).epsilon(1e-12));
    CHECK(tape.value(s.c)[j] == doctest::Approx(c_ref[j]).epsilon(1e-12));
  }

  // Determinism: the same inputs produce bitwise identical outputs.
  Tape<double> tape2(params);
  LstmStep s2 = lstm_cell(tape2, "cell", H, tape2.input(x), tape2.input(h0), tape2.input(c0));
  CHECK(tape.value(s.h) == tape2.value(s2.h));
}

TEST_CASE("zero-parameter lstm cell outputs zero") {
  ParamStore<double> params;
  std::mt19937_64 rng(1);
  init_lstm(params, "z", 3, 2, rng);
  params.get("z.Wx").fill(0.0);
  params.get("z.Wh").fill(0.0);
  params.get("z.b").fill(0.0);
  Tape<double> tape(params);
  LstmStep s = lstm_cell(tape, "z", 2, tape.input({1.0, -2.0, 3.0}),
                         tape.input({0.0, 0.0}), tape.input({0.0, 0.0}));
  for (double v : tape.value(s.h)) CHECK(v == 0.0);
}

TEST_CASE("bilstm output dimension and palindrome symmetry") {
  std::mt19937_64 rng(7);
  const std::size_t D = 3, H = 4;
  ParamStore<double> params;
  init_lstm(params, "fwd", D, H, rng);
  init_lstm(params, "bwd", D, H, rng);
  params.get("bwd.Wx").data = params.get("fwd.Wx").data;
  params.get("bwd.Wh").data = params.get("fwd.Wh").data;
  params.get("bwd.b").data = params.get("fwd.b").data;

  const auto a = rand_vec(D, rng), b = rand_vec(D, rng);
  Tape<double> tape(params);
  int out = bilstm_last(tape, "fwd", "bwd", H,
                        {tape.input(a), tape.input(b), tape.input(a)});  // palindrome
  REQUIRE(tape.value(out).size() == 2 * H);
  for (std::size_t j = 0; j < H; ++j)
    CHECK(tape.value(out)[j] == doctest::Approx(tape.value(out)[H + j]).epsilon(1e-12));

  Tape<double> tape1(params);
  CHECK(tape1.value(bilstm_last(tape1, "fwd", "bwd", H, {tape1.input(a)})).size() == 2 * H);
  Tape<double> tape2(params);
  CHECK_THROWS_AS(bilstm_last(tape2, "fwd", "bwd", H, {}), std::invalid_argument);
}

TEST_CASE("feature attention matches the closed-form equations") {
  std::mt19937_64 rng(13);
  const std::size_t d = 4;
  ParamStore<double> params;
  init_attention(params, "attn", d, rng);

  SUBCASE("identical rows attend uniformly") {
    const auto v = rand_vec(d, rng);
    Tape<double> tape(params);
    AttentionNodes a = feature_attention(tape, "attn", {tape.input(v), tape.input(v)});
    CHECK(tape.value(a.weights)[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tape.value(a.weights)[1] == doctest::Approx(0.5).epsilon(1e-12));
    for (std::size_t k = 0; k < d; ++k)
      CHECK(tape.value(a.attended)[k] == doctest::Approx(v[k]).epsilon(1e-12));
  }

  SUBCASE("single row passes through") {
    const auto v = rand_vec(d, rng);
    Tape<double> tape(params);
    AttentionNodes a = feature_attention(tape, "attn", {tape.input(v)});
    CHECK(tape.value(a.weights) == std::vector<double>{1.0});
    CHECK(tape.value(a.attended) == tape.value(tape.input(v)));
  }

  SUBCASE("three random rows match a straight-line evaluation") {
    std::vector<std::vector<double>> rows = {rand_vec(d, rng), rand_vec(d, rng),
                                             rand_vec(d, rng)};
    const Tensor<double>& M = params.get("attn.M");
    const Tensor<double>& c = params.get("attn.c");
    const Tensor<double>& b = params.get("attn.b");
    std::vector<double> scores;
    for (const auto& v : rows) {
      double score = 0;
      for (std::size_t j = 0; j < d; ++j) {
        double mj = b.data[j];
        for (std::size_t r = 0; r < d; ++r) mj += M.at(r, j) * v[r];  // M^T v
        score += std::tanh(mj) * c.data[j];
      }
      scores.push_back(score);
    }
    const double mx = std::max({scores[0], scores[1], scores[2]});
    double z = 0;
    for (double s : scores) z += std::exp(s - mx);
    std::vector<double> alpha;
    for (double s : scores) alpha.push_back(std::exp(s - mx) / z);
    std::vector<double> expect(d, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t k = 0; k < d; ++k) expect[k] += alpha[r] * rows[r][k];

    Tape<double> tape(params);
    AttentionNodes a = feature_attention(
        tape, "attn", {tape.input(rows[0]), tape.input(rows[1]), tape.input(rows[2])});
    double alpha_sum = 0;
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(tape.value(a.weights)[r] == doctest::Approx(alpha[r]).epsilon(1e-12));
      alpha_sum += tape.value(a.weights)[r];
    }
    CHECK(alpha_sum == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t k = 0; k < d; ++k)
      CHECK(tape.value(a.attended)[k] == doctest::Approx(expect[k]).epsilon(1e-12));
  }
}

TEST_CASE("softmax sigmoid and loss closed forms") {
  ParamStore<double> params;
  Tape<double> tape(params);
  const int sm = tape.softmax(tape.input({0.0, 0.0, 0.0}));
  for (double p : tape.value(sm)) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(tape.value(tape.sigmoid_node(tape.input({0.0})))[0] == 0.5);

  const int loss3 = tape.pick_neg_log(sm, 1);
  CHECK(tape.value(loss3)[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  const int bce_loss = tape.bce(tape.sigmoid_node(tape.input({0.0})), 1);
  CHECK(tape.value(bce_loss)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Near-perfect prediction: loss near zero, clamp keeps it finite.
  const int sharp = tape.softmax(tape.input({40.0, 0.0, 0.0}));
  CHECK(tape.value(tape.pick_neg_log(sharp, 0))[0] < 1e-9);
  const int clamped = tape.pick_neg_log(tape.input({0.0, 1.0}), 0);
  CHECK(tape.value(clamped)[0] == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));

  // Random logits normalize.
  std::mt19937_64 rng(3);
  const int rsm = tape.softmax(tape.input(rand_vec(5, rng)));
  double total = 0;
  for (double p : tape.value(rsm)) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gradients match finite differences per block") {
  std::mt19937_64 rng(101);

  SUBCASE("embedding plus lstm chain") {
    ParamStore<double> params;
    init_embedding(params, "emb", 6, 4, rng);
    init_lstm(params, "cell", 4, 3, rng);
    auto forward = [](Tape<double>& tape) {
      int h = tape.input({0.0, 0.0, 0.0});
      int c = tape.input({0.0, 0.0, 0.0});
      for (std::size_t row : {1u, 4u, 2u}) {
        LstmStep s = lstm_cell(tape, "cell", 3, tape.embed("emb", row), h, c);
        h = s.h;
        c = s.c;
      }
      return tape.dot(h, h);
    };
    const auto report = testsupport::fd_check(
        params,
        [&](const ParamStore<double>& p) {
          Tape<double> t(p);
          return t.value(forward(t))[0];
        },
        [&](ParamStore<double>& grads) {
          Tape<double> t(params, &grads);
          t.backward(forward(t));
        });
    INFO("worst ", report.worst);
    CHECK(report.max_rel < 1e-4);
  }

  SUBCASE("bilstm encoder") {
    ParamStore<double> params;
    init_lstm(params, "f", 3, 2, rng);
    init_lstm(params, "b", 3, 2, rng);
    const std::vector<std::vector<double>> xs = {rand_vec(3, rng), rand_vec(3, rng),
                                                 rand_vec(3, rng)};
    auto forward = [&xs](Tape<double>& tape) {
      std::vector<int> nodes;
      for (const auto& x : xs) nodes.push_back(tape.input(x));
      int enc = bilstm_last(tape, "f", "b", 2, nodes);
      return tape.dot(enc, enc);
    };
    const auto report = testsupport::fd_check(
        params,
        [&](const ParamStore<double>& p) {
          Tape<double> t(p);
          return t.value(forward(t))[0];
        },
        [&](ParamStore<double>& grads) {
          Tape<double> t(params, &grads);
          t.backward(forward(t));
        });
    INFO("worst ", report.worst);
    CHECK(report.max_rel < 1e-4);
  }

  SUBCASE("feature attention") {
    ParamStore<double> params;
    init_attention(params, "attn", 4, rng);
    const std::vector<std::vector<double>> rows = {rand_vec(4, rng), rand_vec(4, rng),
                                                   rand_vec(4, rng)};
    auto forward = [&rows](Tape<double>& tape) {
      std::vector<int> nodes;
      for (const auto& v : rows) nodes.push_back(tape.input(v));
      AttentionNodes a = feature_attention(tape, "attn", nodes);
      return tape.dot(a.attended, a.attended);
    };
    const auto report = testsupport::fd_check(
        params,
        [&](const ParamStore<double>& p) {
          Tape<double> t(p);
          return t.value(forward(t))[0];
        },
        [&](ParamStore<double>& grads) {
          Tape<double> t(params, &grads);
          t.backward(forward(t));
        });
    INFO("worst ", report.worst);
    CHECK(report.max_rel < 1e-4);
  }

  SUBCASE("softmax head with negative log likelihood") {
    ParamStore<double> params;
    init_linear(params, "out", 5, 3, rng);
    const auto x = rand_vec(5, rng);
    auto forward = [&x](Tape<double>& tape) {
      return tape.pick_neg_log(tape.softmax(linear(tape, "out", tape.input(x))), 2);
    };
    const auto report = testsupport::fd_check(
        params,
        [&](const ParamStore<double>& p) {
          Tape<double> t(p);
          return t.value(forward(t))[0];
        },
        [&](ParamStore<double>& grads) {
          Tape<double> t(params, &grads);
          t.backward(forward(t));
        });
    INFO("worst ", report.worst);
    CHECK(report.max_rel < 1e-4);
  }

  SUBCASE("sigmoid head with binary cross entropy") {
    ParamStore<double> params;
    init_linear(params, "out", 4, 1, rng);
    const auto x = rand_vec(4, rng);
    auto forward = [&x](Tape<double>& tape) {
      return tape.bce(tape.sigmoid_node(linear(tape, "out", tape.input(x))), 0);
    };
    const auto report = testsupport::fd_check(
        params,
        [&](const ParamStore<double>& p) {
          Tape<double> t(p);
          return t.value(forward(t))[0];
        },
        [&](ParamStore<double>& grads) {
          Tape<double> t(params, &grads);
          t.backward(forward(t));
        });
    INFO("worst ", report.worst);
    CHECK(report.max_rel < 1e-4);
  }
}

TEST_CASE("unused parameters get exactly zero gradient") {
  std::mt19937_64 rng(5);
  ParamStore<double> params;
  init_linear(params, "used", 3, 2, rng);
  init_linear(params, "spare", 3, 2, rng);
  ParamStore<double> grads = params.zeros_like();
  Tape<double> tape(params, &grads);
  tape.backward(tape.dot(linear(tape, "used", tape.input({1.0, 2.0, 3.0})),
                         tape.input({1.0, 1.0})));
  for (double g : grads.get("spare.W").data) CHECK(g == 0.0);
  for (double g : grads.get("spare.b").data) CHECK(g == 0.0);
  bool any = false;
  for (double g : grads.get("used.W").data) any = any || g != 0.0;
  CHECK(any);
}

TEST_CASE("backward misuse raises") {
  ParamStore<double> params;
  Tape<double> empty(params);
  CHECK_THROWS_AS(empty.backward(0), std::logic_error);

  Tape<double> tape(params);
  const int node = tape.dot(tape.input({1.0}), tape.input({2.0}));
  tape.backward(node);
  CHECK_THROWS_AS(tape.backward(node), std::logic_error);
}

TEST_CASE("saturated prediction leaves a near-zero gradient") {
  std::mt19937_64 rng(17);
  ParamStore<double> params;
  init_linear(params, "out", 2, 1, rng);
  params.get("out.b").data[0] = 30.0;  // sigmoid ~ 1
  ParamStore<double> grads = params.zeros_like();
  Tape<double> tape(params, &grads);
  tape.backward(tape.bce(tape.sigmoid_node(linear(tape, "out", tape.input({0.1, 0.1}))), 1));
  double norm = 0;
  for (const auto& name : grads.names())
    for (double g : grads.get(name).data) norm += g * g;
  CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("dropout identity and inverted-mask expectation") {
  ParamStore<double> params;
  std::mt19937_64 rng(23);

  Tape<double> tape(params);
  const std::vector<double> x = {1.0, -2.0, 3.0};
  const int kept = tape.dropout(tape.input(x), 0.0, rng);
  CHECK(tape.value(kept) == x);

  const std::size_t n = 100000;
  Tape<double> mc(params);
  const int masked = mc.dropout(mc.input(std::vector<double>(n, 1.0)), 0.5, rng);
  double mean = 0;
  for (double v : mc.value(masked)) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0).epsilon(1e-12)));
    mean += v;
  }
  mean /= static_cast<double>(n);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("adam first step and zero-gradient behavior") {
  ParamStore<float> params;
  params.add("w", {4});
  params.get("w").fill(0.25f);
  ParamStore<float> grads = params.zeros_like();

  // A fresh optimizer with no gradient leaves everything in place.
  Adam<float> idle(params, 1e-4f);
  const ParamStore<float> before = params;
  idle.step(params, grads);
  CHECK(idle.steps() == 1);
  CHECK(params == before);

  // First real step moves each weight by almost exactly the learning rate.
  grads.get("w").fill(1.0f);
  Adam<float> opt(params, 1e-4f);
  opt.step(params, grads);
  CHECK(opt.steps() == 1);
  for (float w : params.get("w").data)
    CHECK(w == doctest::Approx(0.25 - 1e-4).epsilon(1e-6));

  // Momentum carries motion into a zero-gradient step; Adam is not SGD.
  const ParamStore<float> after_one = params;
  grads.zero_all();
  opt.step(params, grads);
  CHECK_FALSE(params == after_one);
}

TEST_CASE("adam runs are bitwise reproducible") {
  auto run = [] {
    std::mt19937_64 rng(31);
    ParamStore<float> params;
    init_linear(params, "l", 3, 2, rng);
    ParamStore<float> grads = params.zeros_like();
    Adam<float> opt(params, 1e-3f);
    for (int step = 0; step < 5; ++step) {
      Tape<float> tape(params, &grads);
      grads.zero_all();
      tape.backward(tape.dot(linear(tape, "l", tape.input({1.0f, 0.5f, -1.0f})),
                             tape.input({1.0f, 2.0f})));
      opt.step(params, grads);
    }
    return params;
  };
  CHECK(run() == run());
}

TEST_CASE("frozen tensors are skipped by the optimizer") {
  std::mt19937_64 rng(37);
  ParamStore<float> params;
  init_embedding(params, "word_emb", 4, 3, rng);
  init_linear(params, "out", 3, 1, rng);
  const ParamStore<float> before = params;
  ParamStore<float> grads = params.zeros_like();
  grads.get("word_emb").fill(1.0f);
  grads.get("out.W").fill(1.0f);
  Adam<float> opt(params, 1e-2f);
  opt.step(params, grads, {"word_emb"});
  CHECK(params.get("word_emb").data == before.get("word_emb").data);
  CHECK(params.get("out.W").data != before.get("out.W").data);
}

TEST_CASE("batch loss is permutation invariant under mean reduction") {
  std::mt19937_64 rng(41);
  ParamStore<double> params;
  init_linear(params, "out", 3, 3, rng);
  const std::vector<std::vector<double>> xs = {rand_vec(3, rng), rand_vec(3, rng),
                                               rand_vec(3, rng), rand_vec(3, rng)};
  const std::vector<std::size_t> golds = {0, 2, 1, 1};
  auto batch_loss = [&](const std::vector<std::size_t>& order) {
    Tape<double> tape(params);
    std::vector<int> losses;
    for (std::size_t i : order)
      losses.push_back(
          tape.pick_neg_log(tape.softmax(linear(tape, "out", tape.input(xs[i]))), golds[i]));
    return tape.value(tape.scale(tape.sum(losses), 1.0 / 4.0))[0];
  };
  CHECK(batch_loss({0, 1, 2, 3}) == doctest::Approx(batch_loss({3, 1, 0, 2})).epsilon(1e-12));
}

TEST_CASE("parameter files round trip bitwise and reject damage") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "convsat_test_params";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::mt19937_64 rng(43);
  ParamStore<float> params;
  params.seed = 99;
  params.config_hash = 0xabcdef01;
  init_lstm(params, "cell", 5, 4, rng);
  init_embedding(params, "emb", 7, 3, rng);

  save_params(params, dir / "p.bin");
  const ParamStore<float> back = load_params<float>(dir / "p.bin");
  CHECK(back == params);
  CHECK(back.seed == 99);
  CHECK(back.config_hash == 0xabcdef01);

  // Truncation breaks the checksum.
  {
    std::ifstream in(dir / "p.bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(dir / "cut.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  CHECK_THROWS_AS(load_params<float>(dir / "cut.bin"), std::runtime_error);

  // A flipped payload byte breaks the checksum.
  {
    std::ifstream in(dir / "p.bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
    std::ofstream out(dir / "flip.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_WITH_AS(load_params<float>(dir / "flip.bin"), doctest::Contains("checksum"),
                       std::runtime_error);

  // Double-precision stores do not load into single-precision runs.
  ParamStore<double> dparams;
  init_linear(dparams, "l", 2, 2, rng);
  save_params(dparams, dir / "d.bin");
  CHECK_THROWS_AS(load_params<float>(dir / "d.bin"), std::runtime_error);
  CHECK(load_params<double>(dir / "d.bin") == dparams);
}

TEST_CASE("uniform_unit is deterministic and in range") {
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = uniform_unit<double>(a);
    CHECK(x == uniform_unit<double>(b));
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}
