// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance                 all criteria
//   acceptance --criterion N   just one (exit 0 only if it passes)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../support/oracles.hpp"
#include "tsm/accounting.hpp"
#include "tsm/config.hpp"
#include "tsm/discontinuity.hpp"
#include "tsm/losses.hpp"
#include "tsm/model.hpp"
#include "tsm/nn.hpp"
#include "tsm/parallel.hpp"
#include "tsm/random.hpp"
#include "tsm/scanorder.hpp"
#include "tsm/ssm.hpp"
#include "tsm/trajectory.hpp"
#include "tsm/weights.hpp"

using namespace tsm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string triple(const DiscontinuityReport& r) {
  std::ostringstream os;
  os << r.procedure << " (delta, intra, inter) = (" << r.delta << ", " << r.delta_intra
     << ", " << r.delta_inter << ")";
  return os.str();
}

DiscontinuityReport proc(const char* a, const char* sh, const char* b) {
  return analyze(parse_variant(a), parse_shift(sh), parse_variant(b), 8, 4);
}

Outcome delta_reproduction() {
  const auto r = proc("scan1", "U1", "scan3");
  const bool ok = r.delta == 18 && r.delta_intra == 18 && r.delta_inter == 0;
  return {ok, triple(r) + ", expected (18, 18, 0)"};
}

Outcome inter_window_optimum() {
  const auto ul = proc("scan1", "UL3", "scan3");
  const auto ur = proc("scan1", "UR3", "scan3");
  const auto mirrored = mirror_records(ul.regions, 8);
  bool same = mirrored.size() == ur.regions.size();
  for (std::size_t i = 0; same && i < mirrored.size(); ++i) {
    same = mirrored[i].anchor == ur.regions[i].anchor &&
           mirrored[i].kind == ur.regions[i].kind &&
           mirrored[i].d_first == ur.regions[i].d_first &&
           mirrored[i].d_second == ur.regions[i].d_second &&
           mirrored[i].eliminated == ur.regions[i].eliminated;
  }
  const bool ok = ul.delta_inter == 6 && ur.delta_inter == 6 && same;
  return {ok, triple(ul) + "; " + triple(ur) + "; expected inter = 6 each; mirror-equal reports: " +
                  (same ? "yes" : "no")};
}

Outcome symmetric_best() {
  std::string detail;
  bool ok = true;
  for (auto [a, sh, b] : {std::tuple{"scan2", "L1", "scan4"}, std::tuple{"scan3", "D1", "scan1"},
                          std::tuple{"scan4", "R1", "scan2"}}) {
    const auto r = proc(a, sh, b);
    ok = ok && r.delta == 18;
    detail += triple(r) + "; ";
  }
  const auto rows = search_procedures(8, 4, default_shifts());
  int best = 0;
  for (const auto& r : rows) best = std::max(best, r.delta_intra);
  ok = ok && best == 18;
  detail += "expected delta = 18 each; search max delta_intra = " + std::to_string(best) +
            " over " + std::to_string(rows.size()) + " procedures (expected 18)";
  return {ok, detail};
}

Outcome hilbert_properties() {
  int checked = 0;
  for (ScanVariant v : kAllVariants) {
    for (int n : {2, 4, 8, 16, 32}) {
      const ScanOrder s = generate_scan(v, n);
      if (!is_bijection(s) || !is_continuous(s)) {
        return {false, variant_name(v) + " size " + std::to_string(n) + " not a continuous bijection"};
      }
      const auto idx = s.index_map();
      // Every aligned 2^k block is visited in one contiguous run; for 2x2
      // blocks that is degree 0.
      for (int b = 2; b <= n; b *= 2) {
        for (int r0 = 0; r0 < n; r0 += b) {
          for (int c0 = 0; c0 < n; c0 += b) {
            int lo = n * n, hi = -1;
            for (int r = r0; r < r0 + b; ++r)
              for (int c = c0; c < c0 + b; ++c) {
                lo = std::min(lo, idx[r * n + c]);
                hi = std::max(hi, idx[r * n + c]);
              }
            if (hi - lo + 1 != b * b) {
              return {false, variant_name(v) + " size " + std::to_string(n) + " block not contiguous"};
            }
            if (b == 2 && region_degree(s, {{r0, c0}}) != 0) {
              return {false, variant_name(v) + " aligned quadrant with nonzero degree"};
            }
          }
        }
      }
      ++checked;
    }
  }
  return {true, std::to_string(checked) + " curves: bijective, 4-connected, aligned blocks contiguous"};
}

Outcome degree_range() {
  Rng rng(2024);
  std::size_t regions = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    ScanOrder s;
    s.size = 8;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) s.order.push_back({r, c});
    for (std::size_t i = s.order.size() - 1; i > 0; --i) std::swap(s.order[i], s.order[rng.index(i + 1)]);
    const auto idx = s.index_map();
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 7; ++c) {
        const int d = region_degree(s, {{r, c}});
        const int want = oracle::gaps({idx[r * 8 + c], idx[r * 8 + c + 1], idx[(r + 1) * 8 + c],
                                       idx[(r + 1) * 8 + c + 1]});
        if (d < 0 || d > 3 || d != want) return {false, "bad degree " + std::to_string(d)};
        ++regions;
      }
    }
  }
  return {true, std::to_string(regions) + " regions over 1000 random orders, all in {0,1,2,3}"};
}

oracle::ScanRef ref_of(const ScanParams64& p) {
  return {p.channels, p.state_dim, p.a, p.w_delta, p.b_delta, p.w_b, p.w_c, p.d};
}

Outcome scan_oracle() {
  Rng rng(606);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t len = 1 + rng.index(64);
    const int n = 1 + static_cast<int>(rng.index(16));
    const int c = 1 + static_cast<int>(rng.index(8));
    const ScanParams64 p = to_f64(random_scan_params(c, n, rng));
    std::vector<double> u(len * c);
    for (auto& v : u) v = rng.uniform(-1, 1);
    const auto y = scan_forward64(p, u, len);
    const auto ref = oracle::scan(ref_of(p), u, len);
    for (std::size_t k = 0; k < y.size(); ++k) worst = std::max(worst, std::fabs(y[k] - ref[k]));
  }
  std::ostringstream os;
  os << "100 instances, max abs error " << worst << " (limit 1e-6)";
  return {worst < 1e-6, os.str()};
}

Outcome gradient_check() {
  Rng rng(707);
  double worst = 0.0;
  auto rel = [](double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-3}); };
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t len = 16;
    const int c = 4, n = 8;
    ScanParams64 p = to_f64(random_scan_params(c, n, rng));
    std::vector<double> u(len * c), dy(len * c);
    for (auto& v : u) v = rng.uniform(-1, 1);
    for (auto& v : dy) v = rng.uniform(-1, 1);
    ScanCache cache;
    scan_forward64(p, u, len, &cache);
    const auto g = scan_backward64(p, u, len, cache, dy);
    auto loss = [&](const std::vector<double>& uu) {
      const auto y = scan_forward64(p, uu, len);
      double acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * dy[i];
      return acc;
    };
    const double h = 1e-5;
    auto probe = [&](std::vector<double>& x, const std::vector<double>& grad) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = loss(u);
        x[i] = keep - h;
        const double fm = loss(u);
        x[i] = keep;
        worst = std::max(worst, rel(grad[i], (fp - fm) / (2 * h)));
      }
    };
    probe(u, g.u);
    probe(p.a, g.a);
    probe(p.w_delta, g.w_delta);
    probe(p.b_delta, g.b_delta);
    probe(p.w_b, g.w_b);
    probe(p.w_c, g.w_c);
    probe(p.d, g.d);
  }

  double worst_ch = 0.0;
  std::vector<double> sr(200), hr(200);
  for (std::size_t i = 0; i < sr.size(); ++i) {
    hr[i] = rng.uniform(0, 1);
    sr[i] = hr[i] + rng.uniform(-0.2, 0.2);
  }
  const auto g = charbonnier_grad64(sr, hr, 1e-4);
  for (std::size_t i = 0; i < sr.size(); ++i) {
    const double h = 1e-7, keep = sr[i];
    sr[i] = keep + h;
    const double fp = charbonnier64(sr, hr, 1e-4);
    sr[i] = keep - h;
    const double fm = charbonnier64(sr, hr, 1e-4);
    sr[i] = keep;
    worst_ch = std::max(worst_ch, rel(g[i], (fp - fm) / (2 * h)));
  }
  std::ostringstream os;
  os << "scan max rel error " << worst << " (limit 1e-4); charbonnier max rel error " << worst_ch
     << " (limit 1e-5)";
  return {worst < 1e-4 && worst_ch < 1e-5, os.str()};
}

Outcome selection_oracle() {
  Rng rng(808);
  std::size_t tokens = 0;
  for (int inst = 0; inst < 50; ++inst) {
    int ht = 1 + static_cast<int>(rng.index(8)), wt = 1 + static_cast<int>(rng.index(8));
    const int tw = 4 + static_cast<int>(rng.index(5));
    const int c = 1 + static_cast<int>(rng.index(8));
    const int ts = 1 + static_cast<int>(rng.index(4));
    auto field = [&](double scale_lo, double scale_hi, const TokenField* like) {
      TokenField f;
      f.ht = ht;
      f.wt = wt;
      if (like) {
        f.tokens = like->tokens;
        for (std::size_t i = 0; i < f.count(); ++i) {
          const float a = static_cast<float>(rng.uniform(scale_lo, scale_hi));
          for (int k = 0; k < c; ++k) f.tokens.at(i, k) *= a;
        }
      } else {
        f.tokens = rng.uniform_tensor({f.count(), static_cast<std::size_t>(c)}, -1, 1);
        // Plant exact ties now and then.
        for (std::size_t i = 0; i < f.count(); ++i)
          if (rng.index(6) == 0)
            for (int k = 0; k < c; ++k) f.tokens.at(i, k) = 0.5f;
      }
      return f;
    };
    const TokenField q = field(0, 0, nullptr);
    std::vector<TokenField> prev;
    for (int h = 1; h < tw; ++h) prev.push_back(field(0, 0, nullptr));
    auto tr = initial_trajectories(ht, wt, ts, tw);
    for (double& v : tr.coords) v = rng.uniform(-2, ts * std::max(ht, wt) + 2.0);
    const auto sel = select_tokens(q, prev, tr, 3);

    for (std::size_t i = 0; i < q.count(); ++i) {
      std::vector<double> scores;
      for (int h = 1; h < tw; ++h) {
        const auto [x, y] = tr.at_offset(i, h);
        const double half = (ts + 1) / 2.0;
        const int ti = std::clamp(static_cast<int>(std::floor((x - half) / ts + 0.5)), 0, ht - 1);
        const int tj = std::clamp(static_cast<int>(std::floor((y - half) / ts + 0.5)), 0, wt - 1);
        scores.push_back(oracle::cosine(q.tokens.data() + i * c,
                                        prev[h - 1].tokens.data() + (ti * wt + tj) * c, c));
      }
      const auto want = oracle::top_s(scores, 3);
      for (int j = 0; j < 3; ++j) {
        if (sel.offsets[i * 3 + j] != want[j]) {
          return {false, "instance " + std::to_string(inst) + " token " + std::to_string(i) +
                             " ranks differ from the exhaustive sort"};
        }
      }
      ++tokens;
    }

    // Positive rescaling of any token leaves the ranking unchanged. Powers
    // of two keep the float products exact.
    TokenField q2 = q;
    std::vector<TokenField> prev2 = prev;
    auto pow2 = [&](TokenField& f) {
      for (std::size_t i = 0; i < f.count(); ++i) {
        const float a = std::ldexp(1.0f, static_cast<int>(rng.index(9)) - 4);
        for (int k = 0; k < c; ++k) f.tokens.at(i, k) *= a;
      }
    };
    pow2(q2);
    for (auto& f : prev2) pow2(f);
    const auto sel2 = select_tokens(q2, prev2, tr, 3);
    if (sel2.offsets != sel.offsets) {
      return {false, "instance " + std::to_string(inst) + " ranking changed under positive scaling"};
    }
  }
  return {true, "50 instances, " + std::to_string(tokens) +
                    " tokens: exact top-3 match, scaling-invariant argmax"};
}

Outcome loss_fixed_points() {
  Rng rng(909);
  const Tensor img = rng.uniform_tensor({3, 32, 32}, 0, 1);
  const double spa = charbonnier_loss(img, img, 1e-4);

  TrajectorySet lr = initial_trajectories(4, 4, 4, 4);
  for (double& v : lr.coords) v = rng.uniform(1, 16);
  TrajectorySet hr = initial_trajectories(16, 16, 4, 4);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 4; ++k) {
        const std::size_t nh = static_cast<std::size_t>(i) * 16 + j;
        hr.x(nh, k) = 4 * lr.x((i / 4) * 4 + j / 4, k);
        hr.y(nh, k) = 4 * lr.y((i / 4) * 4 + j / 4, k);
      }
  const double trj = trajectory_loss(lr, hr, 4);

  const double a = 0.0123, b = 0.75;
  const double total = total_loss(a, b);
  const bool ok = spa == 1e-4 && trj == 0.0 && total == a + 0.1 * b && total_loss(a, b, 0.0) == a;
  std::ostringstream os;
  os.precision(17);
  os << "L_spa(x, x) = " << spa << ", L_trj(matched) = " << trj << ", L(" << a << ", " << b
     << ") = " << total;
  return {ok, os.str()};
}

std::vector<Tensor> translating_frames() {
  Rng rng(1010);
  const Tensor base = rng.uniform_tensor({3, 40, 40}, 0, 1);
  std::vector<Tensor> frames;
  for (int k = 0; k < 5; ++k) {
    Tensor f({3, 32, 32});
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 32; ++r)
        for (int q = 0; q < 32; ++q) f.at(c, r, q) = base.at(c, r + k / 2, q + k);
    frames.push_back(f);
  }
  return frames;
}

Outcome toy_forward() {
  const ModelConfig cfg;  // scale 4
  const auto frames = translating_frames();
  WeightMap map = random_weight_map(cfg, 0);
  const ModelWeights w = weights_from_map(map, cfg);
  set_num_threads(1);
  const auto one = ts_mamba_forward(frames, w, cfg);
  set_num_threads(8);
  const auto eight = ts_mamba_forward(frames, w, cfg);
  for (auto& [name, t] : map) {
    if (name.rfind("r.", 0) == 0) t = Tensor(t.dims());
  }
  const auto zero = ts_mamba_forward(frames, weights_from_map(map, cfg), cfg);
  set_num_threads(1);
  const Tensor bic = bicubic_upsample(frames.back(), 4);
  const bool shape = one.sr.dims() == Tensor::Dims{3, 128, 128};
  const bool same = one.sr == eight.sr;
  const bool skip = zero.sr == bic;
  std::ostringstream os;
  os << "output " << dims_string(one.sr.dims()) << ", threads 1 vs 8 "
     << (same ? "bit-identical" : "DIFFER") << ", zero R " << (skip ? "==" : "!=") << " bicubic";
  return {shape && same && skip && one.sr.all_finite(), os.str()};
}

Outcome ss3d_structure() {
  const auto wins = window_sequences(variant_orientation(ScanVariant::Scan1), 16, 16, 8, make_shift(0, 0));
  const auto seq = build_ss3d_sequence(wins[0], 3);
  if (seq.entries.size() != 256) {
    return {false, "sequence length " + std::to_string(seq.entries.size())};
  }
  Rng rng(1111);
  for (int inst = 0; inst < 100; ++inst) {
    const int c = 1 + static_cast<int>(rng.index(8));
    const Tensor cur = rng.uniform_tensor({256, static_cast<std::size_t>(c)}, -1, 1);
    const Tensor ctx = rng.uniform_tensor({256, 3, static_cast<std::size_t>(c)}, -1, 1);
    const Tensor stacked = stack_tokens(cur, ctx, 3);
    const auto shift = default_shifts()[rng.index(24)];
    const auto all = window_sequences(static_cast<int>(rng.index(8)), 16, 16, 8, shift);
    Tensor back(stacked.dims());
    for (const auto& win : all) {
      const auto s = build_ss3d_sequence(win, 3);
      scatter_sequence(s, gather_sequence(s, stacked), back);
    }
    if (!(back == stacked)) return {false, "round trip failed on instance " + std::to_string(inst)};
  }
  return {true, "window 8x8, s = 3: length 256; 100 gather/scatter round trips exact"};
}

Outcome non_reproducibility() {
  const ModelConfig base;
  const auto cal = calibrate_channels(base, 3000000, 180, 320);
  std::ostringstream os;
  os << "NOT reproduced: trained-model PSNR/SSIM (e.g. 30.73 dB REDS4), runtime/FPS and ablation "
        "deltas need full training on REDS/Vimeo-90K; criteria 1-11 stand in. "
     << "Diagnostic: C = " << cal.channels << " gives " << cal.params << " params, "
     << static_cast<double>(cal.macs) / 1e9 << " GMACs at 180x320 (reference 112G, no threshold)";
  return {true, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run one criterion (1-12)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "delta reproduction", 1, delta_reproduction},
      {2, "inter-window optimum", 1, inter_window_optimum},
      {3, "symmetric best procedures", 10, symmetric_best},
      {4, "hilbert properties", 5, hilbert_properties},
      {5, "degree range", 5, degree_range},
      {6, "selective-scan oracle", 5, scan_oracle},
      {7, "gradient check", 30, gradient_check},
      {8, "token-selection oracle", 5, selection_oracle},
      {9, "loss fixed points", 1, loss_fixed_points},
      {10, "end-to-end toy forward", 60, toy_forward},
      {11, "ss3d structure", 5, ss3d_structure},
      {12, "non-reproducibility statement", 5, non_reproducibility},
  };
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %-30s %s  %s [%.3fs / %.0fs%s]\n", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : " TIMEOUT");
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed ? 1 : 0;
}
