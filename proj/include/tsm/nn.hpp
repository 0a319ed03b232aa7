#pragma once

#include "tsm/tensor.hpp"

namespace tsm {

// weight [Cout, Cin, K, K], bias [Cout].
struct Conv2d {
  Tensor weight;
  Tensor bias;
  int stride = 1;
  int padding = 1;

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t kernel() const { return weight.dim(2); }
};

struct ResBlock {
  Conv2d conv1;
  Conv2d conv2;
};

// weight [out, in], bias [out].
struct Linear {
  Tensor weight;
  Tensor bias;
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

inline constexpr float kLayerNormEps = 1e-5f;

// Cross-correlation with zero padding; input [Cin, H, W].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding);
Tensor conv2d(const Tensor& input, const Conv2d& conv);

Tensor relu(Tensor x);
Tensor add(const Tensor& a, const Tensor& b);

// x + conv2(relu(conv1(x))).
Tensor residual_block(const Tensor& input, const ResBlock& block);

// [C*r*r, H, W] -> [C, r*H, r*W].
Tensor pixel_shuffle(const Tensor& input, int r);

// Cubic convolution, a = -0.5, replicated edges, half-pixel centers.
Tensor bicubic_upsample(const Tensor& input, int scale);

// Normalizes every row of a [rows, C] tensor over C.
Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta);
Tensor layer_norm(const Tensor& input, const LayerNormParams& p);

// [rows, in] -> [rows, out].
Tensor linear(const Tensor& input, const Linear& layer);

// +infinity for identical inputs.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);
// 11x11 Gaussian window (sigma 1.5), valid region, K1 = 0.01, K2 = 0.03,
// averaged over channels and window positions. Inputs [C, H, W].
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

}  // namespace tsm
