#pragma once

#include <utility>
#include <vector>

#include "tsm/config.hpp"
#include "tsm/nn.hpp"
#include "tsm/tensor.hpp"

namespace tsm {

struct TokenField {
  int frame = 0;
  int ht = 0;
  int wt = 0;
  Tensor tokens;  // [ht * wt, C]

  std::size_t count() const { return static_cast<std::size_t>(ht) * wt; }
  std::size_t width() const { return tokens.dim(1); }
};

// G(.): head conv, residual blocks, then a linear projection of each
// flattened (channel-major) token_size x token_size patch.
struct TokenizerWeights {
  Conv2d head;
  std::vector<ResBlock> blocks;
  Linear proj;  // [C, C * ts * ts]
};

Tensor patchify(const Tensor& feature, int token_size);  // -> [N, C*ts*ts]
Tensor unpatchify(const Tensor& patches, int channels, int height, int width,
                  int token_size);

std::pair<Tensor, TokenField> generate_tokens(const Tensor& frame,
                                              const ModelConfig& config,
                                              const TokenizerWeights& weights,
                                              int frame_index = 0);

// Coordinates are 1-based feature pixels: x is the row in [1, H], y the
// column in [1, W]. Slot j holds frame t - (slots - 1) + j, so the last slot
// is the current frame.
struct TrajectorySet {
  int t = 0;
  int ht = 0;
  int wt = 0;
  int token_size = 0;
  int height = 0;
  int width = 0;
  int slots = 0;
  std::vector<double> coords;  // [N, slots, 2]

  std::size_t count() const { return static_cast<std::size_t>(ht) * wt; }
  double& x(std::size_t i, int slot) { return coords[(i * slots + slot) * 2]; }
  double& y(std::size_t i, int slot) { return coords[(i * slots + slot) * 2 + 1]; }
  double x(std::size_t i, int slot) const { return coords[(i * slots + slot) * 2]; }
  double y(std::size_t i, int slot) const { return coords[(i * slots + slot) * 2 + 1]; }
  // Coordinate of token i at frame t - h.
  std::pair<double, double> at_offset(std::size_t i, int h) const {
    return {x(i, slots - 1 - h), y(i, slots - 1 - h)};
  }
};

double token_center(int token_index, int token_size);  // 1-based
int nearest_token(double coord, int token_size, int tokens);

// Every slot at the token centers (cold start).
TrajectorySet initial_trajectories(int ht, int wt, int token_size, int slots,
                                   int t = 0);

// flow: [2, H, W], (drow, dcol) mapping a pixel of frame t to frame t - 1.
TrajectorySet propagate_trajectories(const TrajectorySet& prev,
                                     const Tensor& flow);

// For each pixel of a, the displacement d minimizing the SAD between the
// 8x8 patch of a at p and of b at p + d, |d| <= radius per axis. Ties: the
// smaller |d|^2, then lexicographic (drow, dcol). Reads are edge-clamped.
Tensor block_matching_flow(const Tensor& a, const Tensor& b, int radius);

struct SelectionResult {
  int s = 0;
  std::size_t tokens = 0;
  std::vector<int> offsets;  // [N, s], h in [1, T - 1], ranked
  Tensor scores;             // [N, s]
  Tensor selected;           // [N, s, C]
};

// Cosine similarity; with squared_norm the vectors are divided by squared
// norms. Zero-norm operands score 0.
double similarity(const float* q, const float* v, std::size_t c,
                  bool squared_norm);

// previous[h - 1] is the token field of frame t - h.
SelectionResult select_tokens(const TokenField& q_field,
                              const std::vector<TokenField>& previous,
                              const TrajectorySet& traj, int s,
                              bool squared_norm = false);

}  // namespace tsm
