#include "tsm/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace tsm {

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'S', 'T', 'F'};

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw FormatError("tstf: truncated header");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(buf[i]) << (8 * i);
  }
  return v;
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw FormatError("pnm: truncated header");
  return tok;
}

}  // namespace

void write_tstf(std::ostream& os, const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) {
    throw FormatError("tstf: rank must be in [1, 255]");
  }
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kTstfVersion);
  put_le<std::uint8_t>(os, 0);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.dims()) put_le<std::uint64_t>(os, d);
  for (float v : t.values()) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
  if (!os) throw FormatError("tstf: write failed");
}

Tensor read_tstf(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("tstf: bad magic");
  }
  const auto version = get_le<std::uint32_t>(is);
  if (version != kTstfVersion) {
    throw FormatError("tstf: unsupported version " + std::to_string(version));
  }
  const auto dtype = get_le<std::uint8_t>(is);
  if (dtype != 0) throw FormatError("tstf: unsupported dtype");
  const auto ndim = get_le<std::uint8_t>(is);
  if (ndim == 0) throw FormatError("tstf: zero rank");
  Tensor::Dims dims(ndim);
  for (auto& d : dims) {
    d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    if (d == 0) throw FormatError("tstf: zero dim");
  }
  const std::size_t n = product(dims);
  std::vector<unsigned char> raw(n * 4);
  if (!is.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw FormatError("tstf: truncated payload");
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                               static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
    data[i] = std::bit_cast<float>(bits);
  }
  return Tensor(std::move(dims), std::move(data));
}

void save_tstf(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_tstf(os, t);
}

Tensor load_tstf(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tstf(is);
}

Tensor load_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::string magic = pnm_token(is);
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("pnm: only binary P5/P6 supported");
  }
  const std::size_t width = std::stoul(pnm_token(is));
  const std::size_t height = std::stoul(pnm_token(is));
  const unsigned long maxval = std::stoul(pnm_token(is));
  if (maxval != 255) throw FormatError("pnm: only 8-bit images supported");
  if (width == 0 || height == 0) throw FormatError("pnm: empty image");

  std::vector<unsigned char> raw(width * height * channels);
  if (!is.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw FormatError("pnm: truncated pixel data");
  }
  Tensor img({channels, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        img.at(c, y, x) = raw[(y * width + x) * channels + c] / 255.0f;
      }
    }
  }
  return img;
}

void save_pnm(const std::filesystem::path& path, const Tensor& image) {
  require_rank(image, 3, "save_pnm");
  const std::size_t channels = image.dim(0);
  if (channels != 1 && channels != 3) {
    throw FormatError("pnm: image must have 1 or 3 channels");
  }
  const std::size_t height = image.dim(1);
  const std::size_t width = image.dim(2);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << (channels == 1 ? "P5" : "P6") << '\n'
     << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> raw(width * height * channels);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        raw[(y * width + x) * channels + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size()));
  if (!os) throw FormatError("pnm: write failed");
}

Tensor load_any(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".tstf") return load_tstf(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  throw FormatError("unsupported file extension: " + path.string());
}

}  // namespace tsm
