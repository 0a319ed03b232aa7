#include "tsm/nn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tsm/parallel.hpp"

namespace tsm {

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  require_rank(bias, 1, "conv2d bias");
  const std::size_t cin = input.dim(0);
  const int h = static_cast<int>(input.dim(1));
  const int w = static_cast<int>(input.dim(2));
  const std::size_t cout = weight.dim(0);
  const int kh = static_cast<int>(weight.dim(2));
  const int kw = static_cast<int>(weight.dim(3));
  if (weight.dim(1) != cin || bias.dim(0) != cout) {
    throw std::invalid_argument("conv2d: weight " + dims_string(weight.dims()) +
                                " / bias " + dims_string(bias.dims()) +
                                " do not fit input " +
                                dims_string(input.dims()));
  }
  if (stride < 1 || padding < 0) {
    throw std::invalid_argument("conv2d: bad stride/padding");
  }
  const int ho = (h + 2 * padding - kh) / stride + 1;
  const int wo = (w + 2 * padding - kw) / stride + 1;
  if (h + 2 * padding < kh || w + 2 * padding < kw) {
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  }
  Tensor out({cout, static_cast<std::size_t>(ho), static_cast<std::size_t>(wo)});
  const float* in = input.data();
  const float* wt = weight.data();
  float* o = out.data();
  // Per output element the sum runs bias, then (ci, ky, kx) in order.
  parallel_for(0, cout, [&](std::size_t co) {
    float* plane = o + co * ho * wo;
    for (int i = 0; i < ho * wo; ++i) plane[i] = bias[co];
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const float* src = in + ci * h * w;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const float k = wt[((co * cin + ci) * kh + ky) * kw + kx];
          for (int y = 0; y < ho; ++y) {
            const int sy = y * stride + ky - padding;
            if (sy < 0 || sy >= h) continue;
            float* row = plane + y * wo;
            const float* srow = src + sy * w;
            for (int x = 0; x < wo; ++x) {
              const int sx = x * stride + kx - padding;
              if (sx < 0 || sx >= w) continue;
              row[x] += k * srow[sx];
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor conv2d(const Tensor& input, const Conv2d& conv) {
  return conv2d(input, conv.weight, conv.bias, conv.stride, conv.padding);
}

Tensor relu(Tensor x) {
  for (float& v : x.values()) v = v > 0.0f ? v : 0.0f;
  return x;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor residual_block(const Tensor& input, const ResBlock& block) {
  Tensor mid = relu(conv2d(input, block.conv1));
  Tensor out = conv2d(mid, block.conv2);
  require_same_dims(out, input, "residual_block");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += input[i];
  return out;
}

Tensor pixel_shuffle(const Tensor& input, int r) {
  require_rank(input, 3, "pixel_shuffle");
  if (r < 1 || input.dim(0) % static_cast<std::size_t>(r * r) != 0) {
    throw std::invalid_argument("pixel_shuffle: channels " +
                                std::to_string(input.dim(0)) +
                                " not divisible by r^2 for r=" +
                                std::to_string(r));
  }
  const std::size_t ru = static_cast<std::size_t>(r);
  const std::size_t c = input.dim(0) / (ru * ru);
  const std::size_t h = input.dim(1), w = input.dim(2);
  Tensor out({c, h * ru, w * ru});
  for (std::size_t oc = 0; oc < c; ++oc) {
    for (std::size_t dy = 0; dy < ru; ++dy) {
      for (std::size_t dx = 0; dx < ru; ++dx) {
        const std::size_t ic = oc * ru * ru + dy * ru + dx;
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            out.at(oc, y * ru + dy, x * ru + dx) = input.at(ic, y, x);
          }
        }
      }
    }
  }
  return out;
}

namespace {

double cubic(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<int, 4> idx;
  std::array<double, 4> w;
};

std::vector<Taps> make_taps(int in, int scale) {
  std::vector<Taps> taps(static_cast<std::size_t>(in) * scale);
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double src = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const double f = std::floor(src);
    const double t = src - f;
    const int i0 = static_cast<int>(f);
    for (int k = 0; k < 4; ++k) {
      taps[i].idx[k] = std::clamp(i0 - 1 + k, 0, in - 1);
      taps[i].w[k] = cubic(t - (k - 1));
    }
  }
  return taps;
}

}  // namespace

Tensor bicubic_upsample(const Tensor& input, int scale) {
  require_rank(input, 3, "bicubic_upsample");
  if (scale < 1) throw std::invalid_argument("bicubic_upsample: scale < 1");
  const std::size_t c = input.dim(0);
  const int h = static_cast<int>(input.dim(1));
  const int w = static_cast<int>(input.dim(2));
  const auto tx = make_taps(w, scale);
  const auto ty = make_taps(h, scale);
  const std::size_t wo = tx.size(), ho = ty.size();
  Tensor out({c, ho, wo});
  parallel_for(0, c, [&](std::size_t ch) {
    std::vector<double> horiz(static_cast<std::size_t>(h) * wo);
    for (int y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          acc += tx[x].w[k] * input.at(ch, y, tx[x].idx[k]);
        }
        horiz[y * wo + x] = acc;
      }
    }
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += ty[y].w[k] * horiz[ty[y].idx[k] * wo + x];
        out.at(ch, y, x) = static_cast<float>(acc);
      }
    }
  });
  return out;
}

Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta) {
  require_rank(input, 2, "layer_norm");
  const std::size_t rows = input.dim(0), c = input.dim(1);
  if (gamma.size() != c || beta.size() != c) {
    throw std::invalid_argument("layer_norm: gamma/beta width mismatch");
  }
  Tensor out(input.dims());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* x = input.data() + r * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += x[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    float* y = out.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      y[j] = static_cast<float>((x[j] - mean) * inv * gamma[j] + beta[j]);
    }
  }
  return out;
}

Tensor layer_norm(const Tensor& input, const LayerNormParams& p) {
  return layer_norm(input, p.gamma, p.beta);
}

Tensor linear(const Tensor& input, const Linear& layer) {
  require_rank(input, 2, "linear input");
  require_rank(layer.weight, 2, "linear weight");
  const std::size_t rows = input.dim(0), in = input.dim(1);
  const std::size_t out_w = layer.weight.dim(0);
  if (layer.weight.dim(1) != in || layer.bias.size() != out_w) {
    throw std::invalid_argument("linear: weight " +
                                dims_string(layer.weight.dims()) +
                                " does not fit input " +
                                dims_string(input.dims()));
  }
  Tensor out({rows, out_w});
  parallel_for(0, rows, [&](std::size_t r) {
    const float* x = input.data() + r * in;
    for (std::size_t o = 0; o < out_w; ++o) {
      const float* wr = layer.weight.data() + o * in;
      float acc = layer.bias[o];
      for (std::size_t j = 0; j < in; ++j) acc += wr[j] * x[j];
      out.at(r, o) = acc;
    }
  });
  return out;
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  require_same_dims(a, b, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
  require_same_dims(a, b, "ssim");
  require_rank(a, 3, "ssim");
  constexpr int kWin = 11;
  const std::size_t ch = a.dim(0);
  const int h = static_cast<int>(a.dim(1)), w = static_cast<int>(a.dim(2));
  if (h < kWin || w < kWin) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }
  std::array<double, kWin> g{};
  double gs = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < ch; ++c) {
    for (int y = 0; y + kWin <= h; ++y) {
      for (int x = 0; x + kWin <= w; ++x) {
        double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
        for (int i = 0; i < kWin; ++i) {
          for (int j = 0; j < kWin; ++j) {
            const double wt = g[i] * g[j];
            const double va = a.at(c, y + i, x + j);
            const double vb = b.at(c, y + i, x + j);
            ma += wt * va;
            mb += wt * vb;
            aa += wt * va * va;
            bb += wt * vb * vb;
            ab += wt * va * vb;
          }
        }
        const double va = aa - ma * ma, vb = bb - mb * mb, cov = ab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace tsm
