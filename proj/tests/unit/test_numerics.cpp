#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/oracles.hpp"
#include "tsm/nn.hpp"
#include "tsm/parallel.hpp"
#include "tsm/random.hpp"
#include "tsm/tensor_io.hpp"

using namespace tsm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tsm_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  t.at(1, 2) = 4.0f;
  CHECK(t[5] == 4.0f);
  const Tensor r = t.reshaped({3, 2});
  CHECK(r.at(2, 1) == 4.0f);
  CHECK_THROWS_AS(t.reshaped({4, 2}), std::invalid_argument);
  CHECK(t.all_finite());
  t[0] = NAN;
  CHECK_FALSE(t.all_finite());
  CHECK(dims_string({3, 4, 5}) == "[3, 4, 5]");
  CHECK(product({3, 4, 5}) == 60);
}

TEST_CASE("tstf header layout is little-endian") {
  Tensor t({2}, std::vector<float>{1.0f, -2.0f});
  std::ostringstream os;
  write_tstf(os, t);
  const std::string b = os.str();
  REQUIRE(b.size() == 4 + 4 + 1 + 1 + 8 + 8);
  CHECK(b.substr(0, 4) == "TSTF");
  CHECK(b[4] == 1);
  CHECK(b[8] == 0);
  CHECK(b[9] == 1);
  CHECK(b[10] == 2);
  // 1.0f = 0x3f800000
  CHECK(static_cast<unsigned char>(b[18 + 3]) == 0x3f);
  CHECK(static_cast<unsigned char>(b[18 + 2]) == 0x80);
}

TEST_CASE("tstf round trip and corrupt input") {
  Rng rng(3);
  const Tensor t = rng.uniform_tensor({2, 3, 5}, -10, 10);
  std::stringstream ss;
  write_tstf(ss, t);
  CHECK(read_tstf(ss) == t);

  std::string bytes;
  {
    std::ostringstream os;
    write_tstf(os, t);
    bytes = os.str();
  }
  std::istringstream bad_magic("XSTF" + bytes.substr(4));
  CHECK_THROWS_AS(read_tstf(bad_magic), FormatError);
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_tstf(truncated), FormatError);
  std::string v2 = bytes;
  v2[4] = 2;
  std::istringstream bad_version(v2);
  CHECK_THROWS_AS(read_tstf(bad_version), FormatError);
}

TEST_CASE("pnm round trip quantizes to 8 bits") {
  const fs::path dir = temp_dir("pnm");
  Rng rng(5);
  Tensor img({3, 4, 6});
  for (auto& v : img.values()) v = static_cast<float>(rng.index(256)) / 255.0f;
  save_pnm(dir / "a.ppm", img);
  const Tensor back = load_pnm(dir / "a.ppm");
  CHECK(back.dims() == img.dims());
  CHECK(max_abs_diff(back, img) < 1e-6f);

  Tensor gray({1, 3, 3}, 2.0f);
  save_pnm(dir / "g.pgm", gray);
  const Tensor g = load_any(dir / "g.pgm");
  CHECK(g.dim(0) == 1);
  CHECK(g[0] == 1.0f);

  std::ofstream(dir / "bad.ppm") << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(load_pnm(dir / "bad.ppm"), FormatError);
  CHECK_THROWS_AS(load_any(dir / "x.bmp"), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("conv2d matches the direct loop") {
  Rng rng(7);
  for (int k : {1, 3, 5}) {
    const Tensor x = rng.uniform_tensor({3, 9, 7}, -1, 1);
    const Tensor w = rng.uniform_tensor({4, 3, static_cast<std::size_t>(k), static_cast<std::size_t>(k)}, -1, 1);
    const Tensor b = rng.uniform_tensor({4}, -1, 1);
    const Tensor got = conv2d(x, w, b, 1, k / 2);
    const Tensor ref = oracle::conv2d(x, w, b, k / 2);
    REQUIRE(got.dims() == ref.dims());
    CHECK(max_abs_diff(got, ref) < 1e-5f);
  }
}

TEST_CASE("conv2d is identical across thread counts") {
  Rng rng(8);
  const Tensor x = rng.uniform_tensor({8, 16, 16}, -1, 1);
  const Tensor w = rng.uniform_tensor({8, 8, 3, 3}, -1, 1);
  const Tensor b = rng.uniform_tensor({8}, -1, 1);
  set_num_threads(1);
  const Tensor a = conv2d(x, w, b, 1, 1);
  set_num_threads(5);
  const Tensor c = conv2d(x, w, b, 1, 1);
  set_num_threads(1);
  CHECK(a == c);
}

TEST_CASE("residual block adds its input") {
  Rng rng(9);
  const Tensor x = rng.uniform_tensor({2, 5, 5}, -1, 1);
  ResBlock blk{{Tensor({2, 2, 3, 3}), Tensor({2})}, {Tensor({2, 2, 3, 3}), Tensor({2})}};
  CHECK(residual_block(x, blk) == x);
}

TEST_CASE("pixel shuffle places channel (dy, dx) at the sub-pixel offset") {
  Tensor x({8, 1, 2});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i);
  const Tensor y = pixel_shuffle(x, 2);
  REQUIRE(y.dims() == Tensor::Dims{2, 2, 4});
  // channel 0 block: ch0 (0,1) ch1 (2,3) ch2 (4,5) ch3 (6,7)
  const float row0[4] = {0, 2, 1, 3};
  const float row1[4] = {4, 6, 5, 7};
  for (int j = 0; j < 4; ++j) {
    CHECK(y.at(0, 0, j) == row0[j]);
    CHECK(y.at(0, 1, j) == row1[j]);
    CHECK(y.at(1, 0, j) == row0[j] + 8);
  }
  CHECK_THROWS_AS(pixel_shuffle(Tensor({6, 2, 2}), 2), std::invalid_argument);
}

TEST_CASE("bicubic preserves constants and reproduces interior ramps") {
  Tensor c({1, 6, 6}, 0.25f);
  const Tensor up = bicubic_upsample(c, 4);
  REQUIRE(up.dims() == Tensor::Dims{1, 24, 24});
  for (float v : up.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));

  const int n = 12, s = 4;
  Tensor ramp({1, n, n});
  for (int r = 0; r < n; ++r)
    for (int q = 0; q < n; ++q) ramp.at(0, r, q) = 0.1f * r + 0.05f * q;
  const Tensor out = bicubic_upsample(ramp, s);
  for (int y = 0; y < n * s; ++y) {
    for (int x = 0; x < n * s; ++x) {
      const double sy = (y + 0.5) / s - 0.5, sx = (x + 0.5) / s - 0.5;
      if (sy < 1 || sx < 1 || sy > n - 3 || sx > n - 3) continue;
      CHECK(out.at(0, y, x) == doctest::Approx(0.1 * sy + 0.05 * sx).epsilon(1e-5));
    }
  }
}

TEST_CASE("layer norm and linear against direct formulas") {
  Rng rng(12);
  const Tensor x = rng.uniform_tensor({5, 7}, -2, 2);
  const Tensor g = rng.uniform_tensor({7}, 0.5, 1.5);
  const Tensor b = rng.uniform_tensor({7}, -0.5, 0.5);
  const Tensor y = layer_norm(x, g, b);
  for (int r = 0; r < 5; ++r) {
    double m = 0, v = 0;
    for (int j = 0; j < 7; ++j) m += x.at(r, j);
    m /= 7;
    for (int j = 0; j < 7; ++j) v += (x.at(r, j) - m) * (x.at(r, j) - m);
    v /= 7;
    for (int j = 0; j < 7; ++j) {
      const double ref = (x.at(r, j) - m) / std::sqrt(v + 1e-5) * g[j] + b[j];
      CHECK(y.at(r, j) == doctest::Approx(ref).epsilon(1e-5));
    }
  }

  Linear lin{rng.uniform_tensor({3, 7}, -1, 1), rng.uniform_tensor({3}, -1, 1)};
  const Tensor z = linear(x, lin);
  for (int r = 0; r < 5; ++r)
    for (int o = 0; o < 3; ++o) {
      double ref = lin.bias[o];
      for (int j = 0; j < 7; ++j) ref += double(lin.weight.at(o, j)) * x.at(r, j);
      CHECK(z.at(r, o) == doctest::Approx(ref).epsilon(1e-5));
    }
  CHECK_THROWS_AS(linear(Tensor({2, 6}), lin), std::invalid_argument);
}

TEST_CASE("psnr and ssim on analytic cases") {
  const Tensor a({1, 16, 16}, 0.4f);
  const Tensor b({1, 16, 16}, 0.5f);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
  // Constant images: zero variance, so only the luminance term remains.
  const double c1 = 0.01 * 0.01;
  const double ref = (2 * 0.4 * 0.5 + c1) / (0.4 * 0.4 + 0.5 * 0.5 + c1);
  CHECK(ssim(a, b) == doctest::Approx(ref).epsilon(1e-5));
  Rng rng(2);
  const Tensor n = rng.uniform_tensor({3, 20, 20}, 0, 1);
  CHECK(ssim(n, n) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ssim(Tensor({1, 8, 8}), Tensor({1, 8, 8})), std::invalid_argument);
}

TEST_CASE("ssim matches a single-window direct evaluation") {
  Rng rng(21);
  const Tensor a = rng.uniform_tensor({1, 11, 11}, 0, 1);
  const Tensor b = rng.uniform_tensor({1, 11, 11}, 0, 1);
  double wsum = 0, ma = 0, mb = 0;
  double w[11][11];
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      wsum += w[i][j];
    }
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      ma += w[i][j] / wsum * a.at(0, i, j);
      mb += w[i][j] / wsum * b.at(0, i, j);
    }
  double va = 0, vb = 0, cov = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      const double p = w[i][j] / wsum;
      va += p * (a.at(0, i, j) - ma) * (a.at(0, i, j) - ma);
      vb += p * (b.at(0, i, j) - mb) * (b.at(0, i, j) - mb);
      cov += p * (a.at(0, i, j) - ma) * (b.at(0, i, j) - mb);
    }
  const double c1 = 1e-4, c2 = 9e-4;
  const double ref = (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  CHECK(ssim(a, b) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("parallel_for visits every index once") {
  for (std::size_t t : {1u, 3u, 16u}) {
    set_num_threads(t);
    std::vector<int> hits(1000, 0);
    parallel_for(0, hits.size(), [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  set_num_threads(1);
}
