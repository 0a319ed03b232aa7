#include "tsm/model.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "tsm/parallel.hpp"

namespace tsm {

namespace {

const char* kBranchName[3] = {"trunk", "intra", "inter"};

bool branch_on(const ModelConfig& cfg, int branch) {
  return branch == 0 || (branch == 1 && cfg.use_intra_branch) ||
         (branch == 2 && cfg.use_inter_branch);
}

Tensor concat_columns(const std::vector<Tensor>& parts) {
  const std::size_t n = parts.front().dim(0);
  std::size_t width = 0;
  for (const auto& p : parts) width += p.dim(1);
  Tensor out({n, width});
  for (std::size_t i = 0; i < n; ++i) {
    float* dst = out.data() + i * width;
    for (const auto& p : parts) {
      const std::size_t c = p.dim(1);
      std::copy_n(p.data() + i * c, c, dst);
      dst += c;
    }
  }
  return out;
}

}  // namespace

BlockScan tsma_block_scan(const ModelConfig& cfg, int path, int branch) {
  if (path < 0 || path > 1 || branch < 0 || branch > 2) {
    throw std::invalid_argument("tsma_block_scan: bad path/branch");
  }
  const ScanVariant trunk = path == 0 ? ScanVariant::Scan1 : ScanVariant::Scan2;
  const ScanVariant second = path == 0 ? ScanVariant::Scan3 : ScanVariant::Scan4;
  BlockScan bs;
  if (branch == 0) {
    bs.orientation = variant_orientation(trunk);
    bs.shift = make_shift(0, 0);
    bs.label = variant_name(trunk);
    return bs;
  }
  bs.orientation = variant_orientation(second);
  if (branch == 1) {
    bs.shift = !cfg.intra_shift ? make_shift(0, 0)
               : path == 0      ? parse_shift("U1")
                                : parse_shift("L1");
  } else {
    // Path 2 names this shift LU(3); it is the same displacement as UL(3).
    bs.shift = cfg.inter_shift ? parse_shift("UL3") : make_shift(0, 0);
  }
  bs.label = variant_name(trunk) + "->" + bs.shift.label + "->" + variant_name(second);
  return bs;
}

std::vector<std::string> describe_tsma(const ModelConfig& cfg) {
  std::vector<std::string> out;
  out.push_back(cfg.use_trajectory ? "select s=" + std::to_string(cfg.s_selected)
                                   : "select none");
  int fused = 0;
  for (int p = 0; p < 2; ++p) {
    for (int b = 0; b < 3; ++b) {
      if (!branch_on(cfg, b)) continue;
      out.push_back("p" + std::to_string(p + 1) + "." + kBranchName[b] + " " +
                    tsma_block_scan(cfg, p, b).label);
      ++fused;
    }
  }
  out.push_back("fuse " + std::to_string(fused) + "xC -> C");
  return out;
}

Tensor tsma_forward(const Tensor& q, const Tensor& context, int s, int ht,
                    int wt, const ModelConfig& cfg, const TsmaWeights& w) {
  require_rank(q, 2, "tsma_forward");
  std::vector<Tensor> parts;
  for (int p = 0; p < 2; ++p) {
    const Tensor trunk = ssm_block(q, context, s, ht, wt, cfg.window_size,
                                   tsma_block_scan(cfg, p, 0), w.blocks[p][0]);
    parts.push_back(trunk);
    for (int b = 1; b < 3; ++b) {
      if (!branch_on(cfg, b)) continue;
      parts.push_back(ssm_block(trunk, context, s, ht, wt, cfg.window_size,
                                tsma_block_scan(cfg, p, b), w.blocks[p][b]));
    }
  }
  const Tensor fused = linear(layer_norm(concat_columns(parts), w.fuse_ln), w.fuse);
  return add(q, fused);
}

Tensor reconstruct(const Tensor& feature, const ModelConfig& cfg,
                   const ReconWeights& w) {
  Tensor x = conv2d(feature, w.head);
  for (const ResBlock& b : w.blocks) x = residual_block(x, b);
  x = conv2d(x, w.tail);
  if (cfg.single_stage_shuffle) return pixel_shuffle(x, cfg.scale);
  for (int r = cfg.scale; r > 1; r /= 2) x = pixel_shuffle(x, 2);
  return x;
}

ForwardResult ts_mamba_forward(const std::vector<Tensor>& frames,
                               const ModelWeights& weights,
                               const ModelConfig& cfg,
                               const std::vector<Tensor>& flows) {
  cfg.validate();
  if (frames.empty()) throw std::invalid_argument("no input frames");
  const Tensor& cur = frames.back();
  require_rank(cur, 3, "frame");
  if (cur.dim(0) != 3) throw std::invalid_argument("frames must have 3 channels");
  for (const auto& f : frames) {
    if (f.dims() != cur.dims()) {
      throw std::invalid_argument("frames differ in size: " + dims_string(f.dims()) +
                                  " vs " + dims_string(cur.dims()));
    }
  }
  if (!flows.empty() && flows.size() + 1 != frames.size()) {
    throw std::invalid_argument("expected " + std::to_string(frames.size() - 1) +
                                " flow fields, got " + std::to_string(flows.size()));
  }
  const int h = static_cast<int>(cur.dim(1)), w = static_cast<int>(cur.dim(2));
  const int ts = cfg.token_size;
  if (h % ts != 0 || w % ts != 0 || (h / ts) % cfg.window_size != 0 ||
      (w / ts) % cfg.window_size != 0) {
    throw std::invalid_argument("frame " + std::to_string(h) + "x" + std::to_string(w) +
                                " must tile into " + std::to_string(ts) +
                                "-pixel tokens and " +
                                std::to_string(cfg.window_size) + "-token windows");
  }
  const int ht = h / ts, wt = w / ts;
  const int s = cfg.effective_s();
  const int tw = s > 0 ? cfg.temporal_window : 1;

  // Window slot j holds frames[idx[j]]; history before the first frame
  // repeats it.
  std::vector<int> idx(tw);
  for (int j = 0; j < tw; ++j) {
    idx[j] = std::max(0, static_cast<int>(frames.size()) - tw + j);
  }

  std::map<int, TokenField> fields;
  for (int j = 0; j < tw; ++j) {
    if (fields.count(idx[j])) continue;
    fields.emplace(idx[j], generate_tokens(frames[idx[j]], cfg, weights.g, idx[j]).second);
  }

  ForwardResult res;
  res.trajectories = initial_trajectories(ht, wt, ts, tw, 0);
  for (int j = 1; j < tw; ++j) {
    Tensor flow;
    if (idx[j] == idx[j - 1]) {
      flow = Tensor({2, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    } else if (!flows.empty()) {
      flow = flows[idx[j] - 1];
    } else {
      flow = block_matching_flow(frames[idx[j]], frames[idx[j - 1]], cfg.flow_radius);
    }
    res.trajectories = propagate_trajectories(res.trajectories, flow);
  }

  const TokenField& q = fields.at(idx[tw - 1]);
  std::vector<TokenField> previous;
  for (int hh = 1; hh < tw; ++hh) previous.push_back(fields.at(idx[tw - 1 - hh]));
  res.selection = select_tokens(q, previous, res.trajectories, s,
                                cfg.squared_norm_similarity);

  const Tensor f = tsma_forward(q.tokens, temporal_context(res.selection), s, ht,
                                wt, cfg, weights.tsma);

  // Transposed patch projection back to token_size x token_size patches.
  const std::size_t c = static_cast<std::size_t>(cfg.channels);
  const std::size_t pw = c * ts * ts;
  const Tensor& pj = weights.g.proj.weight;
  Tensor patches({f.dim(0), pw});
  parallel_for(0, f.dim(0), [&](std::size_t n) {
    for (std::size_t k = 0; k < pw; ++k) {
      float acc = 0.0f;
      for (std::size_t ch = 0; ch < c; ++ch) acc += f.at(n, ch) * pj.at(ch, k);
      patches.at(n, k) = acc;
    }
  });
  const Tensor feature = unpatchify(patches, cfg.channels, h, w, ts);
  res.sr = add(reconstruct(feature, cfg, weights.r), bicubic_upsample(cur, cfg.scale));
  return res;
}

}  // namespace tsm
