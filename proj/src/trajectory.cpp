#include "tsm/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tsm/parallel.hpp"

namespace tsm {

Tensor patchify(const Tensor& feature, int token_size) {
  require_rank(feature, 3, "patchify");
  const std::size_t c = feature.dim(0);
  const std::size_t h = feature.dim(1), w = feature.dim(2);
  const std::size_t ts = static_cast<std::size_t>(token_size);
  if (token_size < 1 || h % ts != 0 || w % ts != 0) {
    throw std::invalid_argument("feature " + dims_string(feature.dims()) +
                                " not divisible by token size " +
                                std::to_string(token_size));
  }
  const std::size_t ht = h / ts, wt = w / ts;
  Tensor out({ht * wt, c * ts * ts});
  for (std::size_t ti = 0; ti < ht; ++ti) {
    for (std::size_t tj = 0; tj < wt; ++tj) {
      float* row = out.data() + (ti * wt + tj) * c * ts * ts;
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t dy = 0; dy < ts; ++dy) {
          for (std::size_t dx = 0; dx < ts; ++dx) {
            row[(ch * ts + dy) * ts + dx] =
                feature.at(ch, ti * ts + dy, tj * ts + dx);
          }
        }
      }
    }
  }
  return out;
}

Tensor unpatchify(const Tensor& patches, int channels, int height, int width,
                  int token_size) {
  require_rank(patches, 2, "unpatchify");
  const std::size_t c = static_cast<std::size_t>(channels);
  const std::size_t ts = static_cast<std::size_t>(token_size);
  const std::size_t ht = static_cast<std::size_t>(height) / ts;
  const std::size_t wt = static_cast<std::size_t>(width) / ts;
  if (patches.dim(0) != ht * wt || patches.dim(1) != c * ts * ts ||
      ht * ts != static_cast<std::size_t>(height) ||
      wt * ts != static_cast<std::size_t>(width)) {
    throw std::invalid_argument("unpatchify: patches " +
                                dims_string(patches.dims()) +
                                " do not tile the target map");
  }
  Tensor out({c, ht * ts, wt * ts});
  for (std::size_t ti = 0; ti < ht; ++ti) {
    for (std::size_t tj = 0; tj < wt; ++tj) {
      const float* row = patches.data() + (ti * wt + tj) * c * ts * ts;
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t dy = 0; dy < ts; ++dy) {
          for (std::size_t dx = 0; dx < ts; ++dx) {
            out.at(ch, ti * ts + dy, tj * ts + dx) = row[(ch * ts + dy) * ts + dx];
          }
        }
      }
    }
  }
  return out;
}

std::pair<Tensor, TokenField> generate_tokens(const Tensor& frame,
                                              const ModelConfig& config,
                                              const TokenizerWeights& weights,
                                              int frame_index) {
  require_rank(frame, 3, "generate_tokens");
  const int ts = config.token_size;
  if (frame.dim(1) % ts != 0 || frame.dim(2) % ts != 0) {
    throw std::invalid_argument("frame " + dims_string(frame.dims()) +
                                " not divisible by token size " +
                                std::to_string(ts));
  }
  Tensor feat = conv2d(frame, weights.head);
  for (const ResBlock& b : weights.blocks) feat = residual_block(feat, b);
  TokenField field;
  field.frame = frame_index;
  field.ht = static_cast<int>(frame.dim(1)) / ts;
  field.wt = static_cast<int>(frame.dim(2)) / ts;
  field.tokens = linear(patchify(feat, ts), weights.proj);
  return {std::move(feat), std::move(field)};
}

double token_center(int token_index, int token_size) {
  return token_index * token_size + (token_size + 1) / 2.0;
}

int nearest_token(double coord, int token_size, int tokens) {
  const double u = (coord - (token_size + 1) / 2.0) / token_size;
  const int k = static_cast<int>(std::floor(u + 0.5));
  return std::clamp(k, 0, tokens - 1);
}

TrajectorySet initial_trajectories(int ht, int wt, int token_size, int slots,
                                   int t) {
  if (ht < 1 || wt < 1 || token_size < 1 || slots < 1) {
    throw std::invalid_argument("initial_trajectories: bad dims");
  }
  TrajectorySet tr{t, ht, wt, token_size, ht * token_size, wt * token_size,
                   slots, {}};
  tr.coords.resize(tr.count() * slots * 2);
  for (int i = 0; i < ht; ++i) {
    for (int j = 0; j < wt; ++j) {
      const std::size_t n = static_cast<std::size_t>(i) * wt + j;
      for (int k = 0; k < slots; ++k) {
        tr.x(n, k) = token_center(i, token_size);
        tr.y(n, k) = token_center(j, token_size);
      }
    }
  }
  return tr;
}

namespace {

double sample_flow(const Tensor& flow, int channel, double r, double c) {
  const int h = static_cast<int>(flow.dim(1)), w = static_cast<int>(flow.dim(2));
  r = std::clamp(r, 0.0, static_cast<double>(h - 1));
  c = std::clamp(c, 0.0, static_cast<double>(w - 1));
  const int r0 = std::min(static_cast<int>(std::floor(r)), std::max(h - 2, 0));
  const int c0 = std::min(static_cast<int>(std::floor(c)), std::max(w - 2, 0));
  const int r1 = std::min(r0 + 1, h - 1), c1 = std::min(c0 + 1, w - 1);
  const double fr = r - r0, fc = c - c0;
  const double top = (1 - fc) * flow.at(channel, r0, c0) + fc * flow.at(channel, r0, c1);
  const double bot = (1 - fc) * flow.at(channel, r1, c0) + fc * flow.at(channel, r1, c1);
  return (1 - fr) * top + fr * bot;
}

// Bilinear interpolation of a slot's coordinates over the token-center grid.
std::pair<double, double> sample_slot(const TrajectorySet& tr, int slot,
                                      double x, double y) {
  const int ts = tr.token_size;
  auto axis = [&](double coord, int n, int& i0, int& i1, double& f) {
    double u = (coord - (ts + 1) / 2.0) / ts;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(std::floor(u)), std::max(n - 2, 0));
    i1 = std::min(i0 + 1, n - 1);
    f = u - i0;
  };
  int a0, a1, b0, b1;
  double fa, fb;
  axis(x, tr.ht, a0, a1, fa);
  axis(y, tr.wt, b0, b1, fb);
  auto idx = [&](int a, int b) { return static_cast<std::size_t>(a) * tr.wt + b; };
  auto lerp2 = [&](auto get) {
    const double top = (1 - fb) * get(idx(a0, b0)) + fb * get(idx(a0, b1));
    const double bot = (1 - fb) * get(idx(a1, b0)) + fb * get(idx(a1, b1));
    return (1 - fa) * top + fa * bot;
  };
  return {lerp2([&](std::size_t n) { return tr.x(n, slot); }),
          lerp2([&](std::size_t n) { return tr.y(n, slot); })};
}

}  // namespace

TrajectorySet propagate_trajectories(const TrajectorySet& prev,
                                     const Tensor& flow) {
  require_rank(flow, 3, "propagate_trajectories flow");
  if (flow.dim(0) != 2 || static_cast<int>(flow.dim(1)) != prev.height ||
      static_cast<int>(flow.dim(2)) != prev.width) {
    throw std::invalid_argument("flow " + dims_string(flow.dims()) +
                                " does not match feature size " +
                                std::to_string(prev.height) + "x" +
                                std::to_string(prev.width));
  }
  TrajectorySet next = initial_trajectories(prev.ht, prev.wt, prev.token_size,
                                            prev.slots, prev.t + 1);
  const int last = prev.slots - 1;
  if (last == 0) return next;
  const double hmax = prev.height, wmax = prev.width;
  for (int i = 0; i < prev.ht; ++i) {
    for (int j = 0; j < prev.wt; ++j) {
      const std::size_t n = static_cast<std::size_t>(i) * prev.wt + j;
      const double px = next.x(n, last), py = next.y(n, last);
      const double qx = std::clamp(px + sample_flow(flow, 0, px - 1, py - 1), 1.0, hmax);
      const double qy = std::clamp(py + sample_flow(flow, 1, px - 1, py - 1), 1.0, wmax);
      next.x(n, last - 1) = qx;
      next.y(n, last - 1) = qy;
      for (int k = 0; k + 1 < last; ++k) {
        const auto [sx, sy] = sample_slot(prev, k + 1, qx, qy);
        next.x(n, k) = std::clamp(sx, 1.0, hmax);
        next.y(n, k) = std::clamp(sy, 1.0, wmax);
      }
    }
  }
  return next;
}

Tensor block_matching_flow(const Tensor& a, const Tensor& b, int radius) {
  require_rank(a, 3, "block_matching_flow");
  require_same_dims(a, b, "block_matching_flow");
  if (radius < 0) throw std::invalid_argument("radius must be >= 0");
  const int c = static_cast<int>(a.dim(0));
  const int h = static_cast<int>(a.dim(1)), w = static_cast<int>(a.dim(2));

  std::vector<std::pair<int, int>> cands;
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) cands.push_back({dr, dc});
  }
  std::stable_sort(cands.begin(), cands.end(), [](auto p, auto q) {
    return p.first * p.first + p.second * p.second <
           q.first * q.first + q.second * q.second;
  });

  Tensor flow({2, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  auto clampi = [](int v, int n) { return std::clamp(v, 0, n - 1); };
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t rr) {
    const int r = static_cast<int>(rr);
    for (int col = 0; col < w; ++col) {
      double best = -1.0;
      std::pair<int, int> best_d{0, 0};
      for (auto [dr, dc] : cands) {
        double sad = 0.0;
        for (int ch = 0; ch < c; ++ch) {
          for (int oy = -4; oy < 4; ++oy) {
            const int ay = clampi(r + oy, h), by = clampi(r + dr + oy, h);
            for (int ox = -4; ox < 4; ++ox) {
              const int ax = clampi(col + ox, w), bx = clampi(col + dc + ox, w);
              sad += std::fabs(static_cast<double>(a.at(ch, ay, ax)) - b.at(ch, by, bx));
            }
          }
        }
        if (best < 0.0 || sad < best) {
          best = sad;
          best_d = {dr, dc};
        }
      }
      flow.at(0, r, col) = static_cast<float>(best_d.first);
      flow.at(1, r, col) = static_cast<float>(best_d.second);
    }
  });
  return flow;
}

double similarity(const float* q, const float* v, std::size_t c,
                  bool squared_norm) {
  double dot = 0.0, qq = 0.0, vv = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    dot += static_cast<double>(q[k]) * v[k];
    qq += static_cast<double>(q[k]) * q[k];
    vv += static_cast<double>(v[k]) * v[k];
  }
  if (qq == 0.0 || vv == 0.0) return 0.0;
  return squared_norm ? dot / (qq * vv) : dot / (std::sqrt(qq) * std::sqrt(vv));
}

SelectionResult select_tokens(const TokenField& q_field,
                              const std::vector<TokenField>& previous,
                              const TrajectorySet& traj, int s,
                              bool squared_norm) {
  const int pool = static_cast<int>(previous.size());
  if (s < 0 || s > pool) {
    throw std::invalid_argument("s = " + std::to_string(s) +
                                " exceeds the pool of " + std::to_string(pool) +
                                " previous frames");
  }
  if (traj.slots < pool + 1) {
    throw std::invalid_argument("trajectories do not cover the pool");
  }
  if (traj.ht != q_field.ht || traj.wt != q_field.wt) {
    throw std::invalid_argument("trajectory grid does not match token grid");
  }
  const std::size_t n = q_field.count(), c = q_field.width();
  for (const auto& f : previous) {
    if (f.ht != q_field.ht || f.wt != q_field.wt || f.width() != c) {
      throw std::invalid_argument("previous token field shape mismatch");
    }
  }
  SelectionResult res;
  res.s = s;
  res.tokens = n;
  res.offsets.assign(n * s, 0);
  if (s == 0) return res;
  res.scores = Tensor({n, static_cast<std::size_t>(s)});
  res.selected = Tensor({n, static_cast<std::size_t>(s), c});

  parallel_for(0, n, [&](std::size_t i) {
    const float* q = q_field.tokens.data() + i * c;
    std::vector<std::pair<double, int>> cand;  // (score, h)
    std::vector<std::size_t> src(pool + 1);
    for (int h = 1; h <= pool; ++h) {
      const auto [x, y] = traj.at_offset(i, h);
      const int ti = nearest_token(x, traj.token_size, traj.ht);
      const int tj = nearest_token(y, traj.token_size, traj.wt);
      src[h] = static_cast<std::size_t>(ti) * traj.wt + tj;
      const float* v = previous[h - 1].tokens.data() + src[h] * c;
      cand.push_back({similarity(q, v, c, squared_norm), h});
    }
    std::stable_sort(cand.begin(), cand.end(), [](auto p, auto q2) {
      if (p.first != q2.first) return p.first > q2.first;
      return p.second < q2.second;
    });
    for (int j = 0; j < s; ++j) {
      const int h = cand[j].second;
      res.offsets[i * s + j] = h;
      res.scores.at(i, j) = static_cast<float>(cand[j].first);
      const float* v = previous[h - 1].tokens.data() + src[h] * c;
      std::copy(v, v + c, res.selected.data() + (i * s + j) * c);
    }
  });
  return res;
}

}  // namespace tsm
