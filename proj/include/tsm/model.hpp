#pragma once

#include <string>
#include <vector>

#include "tsm/config.hpp"
#include "tsm/ssm.hpp"
#include "tsm/trajectory.hpp"
#include "tsm/weights.hpp"

namespace tsm {

// Scan used by block [path][branch] (branch 0 trunk, 1 intra, 2 inter).
BlockScan tsma_block_scan(const ModelConfig& config, int path, int branch);

// One line per block plus the fusion stage, e.g.
// "p1.intra scan3 shift U(1) from scan1". Used to compare ablation graphs.
std::vector<std::string> describe_tsma(const ModelConfig& config);

// q [N, C]; context [N, s, C] in ascending frame order. Returns F [N, C].
Tensor tsma_forward(const Tensor& q, const Tensor& context, int s, int ht,
                    int wt, const ModelConfig& config,
                    const TsmaWeights& weights);

// R(F) without the bicubic skip: conv, residual blocks, conv, shuffle.
Tensor reconstruct(const Tensor& feature, const ModelConfig& config,
                   const ReconWeights& weights);

struct ForwardResult {
  Tensor sr;
  TrajectorySet trajectories;
  SelectionResult selection;
};

// frames: oldest first, last is the current LR frame [3, H, W]. Only the
// last temporal_window frames are used; missing history repeats the first
// frame. flows, when non-empty, has frames.size() - 1 entries where
// flows[k] maps frame k + 1 to frame k; otherwise block matching is used.
ForwardResult ts_mamba_forward(const std::vector<Tensor>& frames,
                               const ModelWeights& weights,
                               const ModelConfig& config,
                               const std::vector<Tensor>& flows = {});

}  // namespace tsm
