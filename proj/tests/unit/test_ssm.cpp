#include <doctest.h>

#include <cmath>
#include <set>

#include "../support/oracles.hpp"
#include "tsm/nn.hpp"
#include "tsm/parallel.hpp"
#include "tsm/random.hpp"
#include "tsm/scanorder.hpp"
#include "tsm/ssm.hpp"

using namespace tsm;

namespace {

oracle::ScanRef ref_of(const SelectiveScanParams& p) {
  oracle::ScanRef r;
  r.c = p.channels;
  r.n = p.state_dim;
  auto cp = [](const Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
  r.a = cp(p.a);
  r.w_delta = cp(p.w_delta);
  r.b_delta = cp(p.b_delta);
  r.w_b = cp(p.w_b);
  r.w_c = cp(p.w_c);
  r.d = cp(p.d);
  return r;
}

double rel(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-3});
}

}  // namespace

TEST_CASE("softplus is stable at both ends") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(softplus(-800.0)));
}

TEST_CASE("random params have A = -(1..N)") {
  Rng rng(1);
  const auto p = random_scan_params(3, 5, rng);
  p.validate();
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 5; ++k) CHECK(p.a.at(c, k) == -(k + 1));
  SelectiveScanParams bad = p;
  bad.w_b = Tensor({4, 3});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("forward matches the plain recurrence") {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const int c = 1 + static_cast<int>(rng.index(8));
    const int n = 1 + static_cast<int>(rng.index(16));
    const std::size_t len = 1 + rng.index(64);
    const auto p = random_scan_params(c, n, rng, 0.5);
    std::vector<double> u(len * c);
    for (auto& v : u) v = rng.uniform(-1, 1);
    const auto got = scan_forward64(to_f64(p), u, len);
    const auto want = oracle::scan(ref_of(p), u, len);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("zero parameters give zero output") {
  const auto p = zero_scan_params(4, 3);
  Rng rng(2);
  const Tensor x = rng.uniform_tensor({10, 4}, -1, 1);
  const Tensor y = selective_scan_forward(p, x);
  for (float v : y.values()) CHECK(v == 0.0f);
}

TEST_CASE("backward matches central differences") {
  Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const int c = 3, n = 4;
    const std::size_t len = 9;
    ScanParams64 p = to_f64(random_scan_params(c, n, rng, 0.4));
    std::vector<double> u(len * c), dy(len * c);
    for (auto& v : u) v = rng.uniform(-1, 1);
    for (auto& v : dy) v = rng.uniform(-1, 1);
    ScanCache cache;
    scan_forward64(p, u, len, &cache);
    const ScanGrads g = scan_backward64(p, u, len, cache, dy);
    auto loss = [&](const ScanParams64& pp, const std::vector<double>& uu) {
      const auto y = scan_forward64(pp, uu, len);
      double acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * dy[i];
      return acc;
    };
    const double eps = 1e-5;
    auto probe = [&](std::vector<double>& x, const std::vector<double>& grad, bool is_u) {
      REQUIRE(x.size() == grad.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double fp = is_u ? loss(p, x) : loss(p, u);
        x[i] = keep - eps;
        const double fm = is_u ? loss(p, x) : loss(p, u);
        x[i] = keep;
        CHECK(rel(grad[i], (fp - fm) / (2 * eps)) < 1e-6);
      }
    };
    probe(u, g.u, true);
    probe(p.a, g.a, false);
    probe(p.w_delta, g.w_delta, false);
    probe(p.b_delta, g.b_delta, false);
    probe(p.w_b, g.w_b, false);
    probe(p.w_c, g.w_c, false);
    probe(p.d, g.d, false);
  }
}

TEST_CASE("tensor API forward and backward agree with the double core") {
  Rng rng(6);
  const auto p = random_scan_params(2, 3, rng);
  const Tensor x = rng.uniform_tensor({7, 2}, -1, 1);
  ScanCache cache;
  const Tensor y = selective_scan_forward(p, x, &cache);
  const std::vector<double> u(x.values().begin(), x.values().end());
  const auto y64 = scan_forward64(to_f64(p), u, 7);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == static_cast<float>(y64[i]));
  const Tensor up({7, 2}, 1.0f);
  const auto g = selective_scan_backward(p, x, cache, up);
  CHECK(g.u.size() == 14);
  CHECK_THROWS_AS(selective_scan_forward(p, Tensor({7, 3})), std::invalid_argument);
}

TEST_CASE("window sequences partition the grid") {
  for (int k = 0; k < 8; ++k) {
    for (const char* sh : {"0", "U1", "L1", "UL3", "DR2"}) {
      const auto wins = window_sequences(k, 16, 8, 8, parse_shift(sh));
      CHECK(wins.size() == 2);
      std::set<int> all;
      for (const auto& w : wins) {
        CHECK(w.size() == 64);
        all.insert(w.begin(), w.end());
      }
      CHECK(all.size() == 128);
    }
  }
  CHECK_THROWS_AS(window_sequences(0, 12, 8, 8, make_shift(0, 0)), std::invalid_argument);
}

TEST_CASE("unshifted window sequence is the Hilbert curve of the window") {
  const auto wins = window_sequences(4, 8, 8, 8, make_shift(0, 0));
  const ScanOrder ref = hilbert_curve(4, 8);
  for (int i = 0; i < 64; ++i) CHECK(wins[0][i] == ref.order[i].row * 8 + ref.order[i].col);
  // Shifted: grid position (R, C) holds original token ((R - dr), (C - dc)).
  const auto sh = window_sequences(4, 8, 8, 8, make_shift(-1, 0));
  for (int i = 0; i < 64; ++i) {
    const int r = (ref.order[i].row + 1) % 8;
    CHECK(sh[0][i] == r * 8 + ref.order[i].col);
  }
}

TEST_CASE("ss3d interleaves context before the current token") {
  const auto seq = build_ss3d_sequence({5, 2, 9}, 3);
  REQUIRE(seq.entries.size() == 12);
  CHECK(seq.entries[0] == std::pair{5, 0});
  CHECK(seq.entries[3] == std::pair{5, 3});
  CHECK(seq.entries[4] == std::pair{2, 0});
  CHECK(seq.entries[11] == std::pair{9, 3});
}

TEST_CASE("gather then scatter restores the stacked tensor") {
  Rng rng(9);
  const Tensor cur = rng.uniform_tensor({64, 5}, -1, 1);
  const Tensor ctx = rng.uniform_tensor({64, 3, 5}, -1, 1);
  const Tensor stacked = stack_tokens(cur, ctx, 3);
  CHECK(stacked.at(7, 3, 2) == cur.at(7, 2));
  CHECK(stacked.at(7, 1, 2) == ctx.at(7, 1, 2));
  const auto wins = window_sequences(2, 8, 8, 8, parse_shift("UL3"));
  const auto seq = build_ss3d_sequence(wins[0], 3);
  const Tensor flat = gather_sequence(seq, stacked);
  CHECK(flat.dim(0) == 256);
  Tensor back(stacked.dims());
  scatter_sequence(seq, flat, back);
  CHECK(back == stacked);
}

TEST_CASE("temporal context orders selections oldest first") {
  SelectionResult sel;
  sel.s = 3;
  sel.tokens = 1;
  sel.offsets = {1, 3, 2};
  sel.selected = Tensor({1, 3, 1}, std::vector<float>{10, 30, 20});
  const Tensor ctx = temporal_context(sel);
  CHECK(ctx.at(0, 0, 0) == 30);
  CHECK(ctx.at(0, 1, 0) == 20);
  CHECK(ctx.at(0, 2, 0) == 10);
}

TEST_CASE("ssm block matches a direct single-window evaluation") {
  Rng rng(14);
  const int c = 4, s = 2, g = 4;
  const Tensor tok = rng.uniform_tensor({16, 4}, -1, 1);
  const Tensor ctx = rng.uniform_tensor({16, 2, 4}, -1, 1);
  SsmBlockWeights w;
  w.ln.gamma = rng.uniform_tensor({4}, 0.5, 1.5);
  w.ln.beta = rng.uniform_tensor({4}, -0.2, 0.2);
  w.scan = random_scan_params(c, 3, rng);
  BlockScan bs{6, make_shift(0, 0), "x"};
  const Tensor got = ssm_block(tok, ctx, s, g, g, g, bs, w);

  auto norm = [&](const float* x) {
    double m = 0, v = 0;
    for (int k = 0; k < c; ++k) m += x[k];
    m /= c;
    for (int k = 0; k < c; ++k) v += (x[k] - m) * (x[k] - m);
    v /= c;
    std::vector<double> out(c);
    for (int k = 0; k < c; ++k) {
      out[k] = static_cast<float>((x[k] - m) / std::sqrt(v + 1e-5) * w.ln.gamma[k] + w.ln.beta[k]);
    }
    return out;
  };
  const ScanOrder order = hilbert_curve(6, g);
  std::vector<double> u;
  std::vector<int> owner;
  for (const Cell& cell : order.order) {
    const int t = cell.row * g + cell.col;
    for (int j = 0; j < s; ++j) {
      const auto v = norm(ctx.data() + (t * s + j) * c);
      u.insert(u.end(), v.begin(), v.end());
      owner.push_back(-1);
    }
    const auto v = norm(tok.data() + t * c);
    u.insert(u.end(), v.begin(), v.end());
    owner.push_back(t);
  }
  const auto y = oracle::scan(ref_of(w.scan), u, owner.size());
  for (std::size_t l = 0; l < owner.size(); ++l) {
    if (owner[l] < 0) continue;
    for (int k = 0; k < c; ++k) {
      const double want = tok.at(owner[l], k) + y[l * c + k];
      CHECK(got.at(owner[l], k) == doctest::Approx(want).epsilon(1e-5));
    }
  }
}

TEST_CASE("ssm block is identical across thread counts") {
  Rng rng(15);
  const Tensor tok = rng.uniform_tensor({256, 8}, -1, 1);
  const Tensor ctx = rng.uniform_tensor({256, 3, 8}, -1, 1);
  SsmBlockWeights w{{Tensor({8}, 1.0f), Tensor({8})}, random_scan_params(8, 4, rng)};
  BlockScan bs{5, parse_shift("UL3"), "x"};
  set_num_threads(1);
  const Tensor a = ssm_block(tok, ctx, 3, 16, 16, 8, bs, w);
  set_num_threads(7);
  const Tensor b = ssm_block(tok, ctx, 3, 16, 16, 8, bs, w);
  set_num_threads(1);
  CHECK(a == b);
}
