#include "tsm/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tsm/parallel.hpp"

namespace tsm {

void SelectiveScanParams::validate() const {
  const std::size_t c = static_cast<std::size_t>(channels);
  const std::size_t n = static_cast<std::size_t>(state_dim);
  if (channels < 1 || state_dim < 1) {
    throw std::invalid_argument("scan params: channels and state_dim must be positive");
  }
  auto check = [](const Tensor& t, Tensor::Dims dims, const char* name) {
    if (t.dims() != dims) {
      throw std::invalid_argument(std::string("scan params: ") + name +
                                  " has dims " + dims_string(t.dims()) +
                                  ", expected " + dims_string(dims));
    }
    if (!t.all_finite()) {
      throw std::invalid_argument(std::string("scan params: ") + name +
                                  " is not finite");
    }
  };
  check(a, {c, n}, "A");
  check(w_delta, {c, c}, "W_delta");
  check(b_delta, {c}, "b_delta");
  check(w_b, {n, c}, "W_B");
  check(w_c, {n, c}, "W_C");
  check(d, {c}, "D");
}

SelectiveScanParams zero_scan_params(int channels, int state_dim) {
  const std::size_t c = static_cast<std::size_t>(channels);
  const std::size_t n = static_cast<std::size_t>(state_dim);
  return {channels, state_dim, Tensor({c, n}), Tensor({c, c}), Tensor({c}),
          Tensor({n, c}), Tensor({n, c}), Tensor({c})};
}

SelectiveScanParams random_scan_params(int channels, int state_dim, Rng& rng,
                                       double scale) {
  SelectiveScanParams p = zero_scan_params(channels, state_dim);
  for (int ch = 0; ch < channels; ++ch) {
    for (int k = 0; k < state_dim; ++k) p.a.at(ch, k) = -static_cast<float>(k + 1);
  }
  for (Tensor* t : {&p.w_delta, &p.b_delta, &p.w_b, &p.w_c, &p.d}) {
    for (float& v : t->values()) v = static_cast<float>(rng.uniform(-scale, scale));
  }
  return p;
}

ScanParams64 to_f64(const SelectiveScanParams& p) {
  p.validate();
  auto cvt = [](const Tensor& t) {
    return std::vector<double>(t.values().begin(), t.values().end());
  };
  return {p.channels, p.state_dim, cvt(p.a), cvt(p.w_delta), cvt(p.b_delta),
          cvt(p.w_b), cvt(p.w_c), cvt(p.d)};
}

double softplus(double z) { return z > 20.0 ? z : std::log1p(std::exp(z)); }

std::vector<double> scan_forward64(const ScanParams64& p,
                                   const std::vector<double>& u,
                                   std::size_t length, ScanCache* cache) {
  const std::size_t C = static_cast<std::size_t>(p.channels);
  const std::size_t N = static_cast<std::size_t>(p.state_dim);
  if (length < 1 || u.size() != length * C) {
    throw std::invalid_argument("scan: sequence must be [L, C] with L >= 1");
  }
  if (cache) {
    cache->length = length;
    cache->z.assign(length * C, 0.0);
    cache->delta.assign(length * C, 0.0);
    cache->b.assign(length * N, 0.0);
    cache->c.assign(length * N, 0.0);
    cache->h.assign(length * C * N, 0.0);
  }
  std::vector<double> y(length * C, 0.0);
  std::vector<double> h(C * N, 0.0), delta(C), bv(N), cv(N);
  for (std::size_t l = 0; l < length; ++l) {
    const double* ul = u.data() + l * C;
    for (std::size_t c = 0; c < C; ++c) {
      double z = p.b_delta[c];
      for (std::size_t j = 0; j < C; ++j) z += p.w_delta[c * C + j] * ul[j];
      delta[c] = softplus(z);
      if (cache) {
        cache->z[l * C + c] = z;
        cache->delta[l * C + c] = delta[c];
      }
    }
    for (std::size_t n = 0; n < N; ++n) {
      double sb = 0.0, sc = 0.0;
      for (std::size_t j = 0; j < C; ++j) {
        sb += p.w_b[n * C + j] * ul[j];
        sc += p.w_c[n * C + j] * ul[j];
      }
      bv[n] = sb;
      cv[n] = sc;
    }
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        double& hc = h[c * N + n];
        hc = std::exp(delta[c] * p.a[c * N + n]) * hc + delta[c] * bv[n] * ul[c];
        acc += cv[n] * hc;
      }
      y[l * C + c] = acc + p.d[c] * ul[c];
    }
    if (cache) {
      std::copy(bv.begin(), bv.end(), cache->b.begin() + l * N);
      std::copy(cv.begin(), cv.end(), cache->c.begin() + l * N);
      std::copy(h.begin(), h.end(), cache->h.begin() + l * C * N);
    }
  }
  return y;
}

ScanGrads scan_backward64(const ScanParams64& p, const std::vector<double>& u,
                          std::size_t length, const ScanCache& cache,
                          const std::vector<double>& dy) {
  const std::size_t C = static_cast<std::size_t>(p.channels);
  const std::size_t N = static_cast<std::size_t>(p.state_dim);
  if (cache.length != length || cache.h.size() != length * C * N ||
      u.size() != length * C || dy.size() != length * C) {
    throw std::invalid_argument("scan backward: cache does not match the sequence");
  }
  ScanGrads g;
  g.u.assign(length * C, 0.0);
  g.a.assign(C * N, 0.0);
  g.w_delta.assign(C * C, 0.0);
  g.b_delta.assign(C, 0.0);
  g.w_b.assign(N * C, 0.0);
  g.w_c.assign(N * C, 0.0);
  g.d.assign(C, 0.0);

  std::vector<double> gh(C * N, 0.0), gdelta(C), gb(N), gc(N), gz(C);
  for (std::size_t l = length; l-- > 0;) {
    const double* ul = u.data() + l * C;
    const double* gy = dy.data() + l * C;
    const double* hl = cache.h.data() + l * C * N;
    const double* delta = cache.delta.data() + l * C;
    const double* bv = cache.b.data() + l * N;
    const double* cv = cache.c.data() + l * N;
    double* gu = g.u.data() + l * C;

    std::fill(gc.begin(), gc.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    std::fill(gdelta.begin(), gdelta.end(), 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      g.d[c] += gy[c] * ul[c];
      gu[c] += gy[c] * p.d[c];
      for (std::size_t n = 0; n < N; ++n) {
        gc[n] += gy[c] * hl[c * N + n];
        gh[c * N + n] += gy[c] * cv[n];
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t n = 0; n < N; ++n) {
        const double an = p.a[c * N + n];
        const double abar = std::exp(delta[c] * an);
        const double hprev = l > 0 ? cache.h[(l - 1) * C * N + c * N + n] : 0.0;
        const double ghc = gh[c * N + n];
        const double gabar = ghc * hprev;
        gdelta[c] += gabar * abar * an + ghc * bv[n] * ul[c];
        g.a[c * N + n] += gabar * abar * delta[c];
        gb[n] += ghc * delta[c] * ul[c];
        gu[c] += ghc * delta[c] * bv[n];
        gh[c * N + n] = ghc * abar;
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      const double z = cache.z[l * C + c];
      gz[c] = gdelta[c] / (1.0 + std::exp(-z));
      g.b_delta[c] += gz[c];
    }
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t j = 0; j < C; ++j) {
        g.w_delta[c * C + j] += gz[c] * ul[j];
        gu[j] += gz[c] * p.w_delta[c * C + j];
      }
    }
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t j = 0; j < C; ++j) {
        g.w_b[n * C + j] += gb[n] * ul[j];
        g.w_c[n * C + j] += gc[n] * ul[j];
        gu[j] += gb[n] * p.w_b[n * C + j] + gc[n] * p.w_c[n * C + j];
      }
    }
  }
  return g;
}

namespace {

std::vector<double> to_vec(const Tensor& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

void check_sequence(const SelectiveScanParams& p, const Tensor& seq) {
  require_rank(seq, 2, "selective_scan sequence");
  if (seq.dim(1) != static_cast<std::size_t>(p.channels)) {
    throw std::invalid_argument("sequence width " + std::to_string(seq.dim(1)) +
                                " does not match channels " +
                                std::to_string(p.channels));
  }
}

}  // namespace

Tensor selective_scan_forward(const SelectiveScanParams& p,
                              const Tensor& sequence, ScanCache* cache) {
  check_sequence(p, sequence);
  const auto y = scan_forward64(to_f64(p), to_vec(sequence), sequence.dim(0), cache);
  Tensor out(sequence.dims());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<float>(y[i]);
  return out;
}

ScanGrads selective_scan_backward(const SelectiveScanParams& p,
                                  const Tensor& sequence,
                                  const ScanCache& cache,
                                  const Tensor& upstream) {
  check_sequence(p, sequence);
  require_same_dims(sequence, upstream, "selective_scan_backward");
  return scan_backward64(to_f64(p), to_vec(sequence), sequence.dim(0), cache,
                         to_vec(upstream));
}

std::vector<std::vector<int>> window_sequences(int orientation, int ht, int wt,
                                              int window,
                                              const ShiftSpec& shift) {
  if (window < 1 || ht % window != 0 || wt % window != 0) {
    throw std::invalid_argument("token grid " + std::to_string(ht) + "x" +
                                std::to_string(wt) +
                                " is not divisible into windows of " +
                                std::to_string(window));
  }
  const ScanOrder local = hilbert_curve(orientation, window);
  auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
  std::vector<std::vector<int>> out;
  for (int wr = 0; wr < ht; wr += window) {
    for (int wc = 0; wc < wt; wc += window) {
      std::vector<int> cells;
      cells.reserve(local.order.size());
      for (Cell c : local.order) {
        const int r = wrap(wr + c.row - shift.delta_row, ht);
        const int col = wrap(wc + c.col - shift.delta_col, wt);
        cells.push_back(r * wt + col);
      }
      out.push_back(std::move(cells));
    }
  }
  return out;
}

ScanSequence build_ss3d_sequence(const std::vector<int>& cells, int s) {
  if (s < 0) throw std::invalid_argument("s must be >= 0");
  ScanSequence seq;
  seq.s = s;
  seq.entries.reserve(cells.size() * (s + 1));
  for (int cell : cells) {
    for (int slot = 0; slot <= s; ++slot) seq.entries.push_back({cell, slot});
  }
  return seq;
}

Tensor stack_tokens(const Tensor& current, const Tensor& context, int s) {
  require_rank(current, 2, "stack_tokens");
  const std::size_t n = current.dim(0), c = current.dim(1);
  const std::size_t su = static_cast<std::size_t>(s);
  if (s > 0 && context.dims() != Tensor::Dims{n, su, c}) {
    throw std::invalid_argument("context " + dims_string(context.dims()) +
                                " does not match " + std::to_string(n) +
                                " tokens x s=" + std::to_string(s));
  }
  Tensor out({n, su + 1, c});
  for (std::size_t i = 0; i < n; ++i) {
    float* dst = out.data() + i * (su + 1) * c;
    if (s > 0) std::copy_n(context.data() + i * su * c, su * c, dst);
    std::copy_n(current.data() + i * c, c, dst + su * c);
  }
  return out;
}

Tensor temporal_context(const SelectionResult& sel) {
  if (sel.s == 0) return {};
  const std::size_t n = sel.tokens, s = static_cast<std::size_t>(sel.s);
  const std::size_t c = sel.selected.dim(2);
  Tensor out({n, s, c});
  std::vector<std::size_t> rank(s);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    // Larger offset h means an older frame, which comes first.
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      return sel.offsets[i * s + a] > sel.offsets[i * s + b];
    });
    for (std::size_t k = 0; k < s; ++k) {
      std::copy_n(sel.selected.data() + (i * s + rank[k]) * c, c,
                  out.data() + (i * s + k) * c);
    }
  }
  return out;
}

Tensor gather_sequence(const ScanSequence& seq, const Tensor& stacked) {
  require_rank(stacked, 3, "gather_sequence");
  const std::size_t slots = stacked.dim(1), c = stacked.dim(2);
  if (slots != static_cast<std::size_t>(seq.s + 1)) {
    throw std::invalid_argument("gather_sequence: slot count mismatch");
  }
  Tensor out({seq.entries.size(), c});
  for (std::size_t l = 0; l < seq.entries.size(); ++l) {
    const auto [tok, slot] = seq.entries[l];
    if (tok < 0 || static_cast<std::size_t>(tok) >= stacked.dim(0)) {
      throw std::invalid_argument("gather_sequence: missing token " +
                                  std::to_string(tok));
    }
    std::copy_n(stacked.data() + (tok * slots + slot) * c, c, out.data() + l * c);
  }
  return out;
}

void scatter_sequence(const ScanSequence& seq, const Tensor& values,
                      Tensor& stacked) {
  require_rank(stacked, 3, "scatter_sequence");
  const std::size_t slots = stacked.dim(1), c = stacked.dim(2);
  if (values.dims() != Tensor::Dims{seq.entries.size(), c}) {
    throw std::invalid_argument("scatter_sequence: values shape mismatch");
  }
  for (std::size_t l = 0; l < seq.entries.size(); ++l) {
    const auto [tok, slot] = seq.entries[l];
    std::copy_n(values.data() + l * c, c, stacked.data() + (tok * slots + slot) * c);
  }
}

Tensor ssm_block(const Tensor& tokens, const Tensor& context, int s, int ht,
                 int wt, int window, const BlockScan& scan,
                 const SsmBlockWeights& weights) {
  require_rank(tokens, 2, "ssm_block");
  const std::size_t n = tokens.dim(0), c = tokens.dim(1);
  if (n != static_cast<std::size_t>(ht) * wt) {
    throw std::invalid_argument("ssm_block: token count does not match grid");
  }
  const std::size_t su = static_cast<std::size_t>(s);
  Tensor normed_ctx;
  if (s > 0) {
    normed_ctx = layer_norm(context.reshaped({n * su, c}), weights.ln)
                     .reshaped({n, su, c});
  }
  const Tensor stacked = stack_tokens(layer_norm(tokens, weights.ln), normed_ctx, s);
  const auto windows = window_sequences(scan.orientation, ht, wt, window, scan.shift);
  const ScanParams64 p = to_f64(weights.scan);
  if (static_cast<std::size_t>(p.channels) != c) {
    throw std::invalid_argument("ssm_block: scan width does not match tokens");
  }
  Tensor out = tokens;
  parallel_for(0, windows.size(), [&](std::size_t w) {
    const ScanSequence seq = build_ss3d_sequence(windows[w], s);
    const Tensor x = gather_sequence(seq, stacked);
    const std::vector<double> u(x.values().begin(), x.values().end());
    const auto y = scan_forward64(p, u, seq.entries.size());
    for (std::size_t l = 0; l < seq.entries.size(); ++l) {
      const auto [tok, slot] = seq.entries[l];
      if (slot != s) continue;
      float* dst = out.data() + static_cast<std::size_t>(tok) * c;
      for (std::size_t k = 0; k < c; ++k) dst[k] += static_cast<float>(y[l * c + k]);
    }
  });
  return out;
}

}  // namespace tsm
