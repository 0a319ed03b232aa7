#include "tsm/weights.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tsm/random.hpp"
#include "tsm/tensor_io.hpp"

namespace tsm {

namespace {

using Layout = std::vector<std::pair<std::string, Tensor::Dims>>;

void add_conv(Layout& l, const std::string& name, std::size_t cout,
              std::size_t cin, std::size_t k) {
  l.push_back({name + ".weight", {cout, cin, k, k}});
  l.push_back({name + ".bias", {cout}});
}

void add_res(Layout& l, const std::string& name, std::size_t c) {
  add_conv(l, name + ".conv1", c, c, 3);
  add_conv(l, name + ".conv2", c, c, 3);
}

void add_ssm_block(Layout& l, const std::string& name, std::size_t c,
                   std::size_t n) {
  l.push_back({name + ".ln.gamma", {c}});
  l.push_back({name + ".ln.beta", {c}});
  l.push_back({name + ".ssm.a", {c, n}});
  l.push_back({name + ".ssm.w_delta", {c, c}});
  l.push_back({name + ".ssm.b_delta", {c}});
  l.push_back({name + ".ssm.w_b", {n, c}});
  l.push_back({name + ".ssm.w_c", {n, c}});
  l.push_back({name + ".ssm.d", {c}});
}

const char* kBranch[3] = {"trunk", "intra", "inter"};

bool branch_enabled(const ModelConfig& cfg, int b) {
  return b == 0 || (b == 1 && cfg.use_intra_branch) ||
         (b == 2 && cfg.use_inter_branch);
}

std::string block_name(int path, int branch) {
  return "tsma.p" + std::to_string(path + 1) + "." + kBranch[branch];
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

const Tensor& fetch(const WeightMap& map, const std::string& name,
                    const Tensor::Dims& dims) {
  auto it = map.find(name);
  if (it == map.end()) {
    throw std::invalid_argument("missing weight tensor: " + name);
  }
  if (it->second.dims() != dims) {
    throw std::invalid_argument("weight tensor " + name + " has dims " +
                                dims_string(it->second.dims()) + ", expected " +
                                dims_string(dims));
  }
  return it->second;
}

}  // namespace

Layout weight_layout(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t c = static_cast<std::size_t>(cfg.channels);
  const std::size_t ts = static_cast<std::size_t>(cfg.token_size);
  const std::size_t n = static_cast<std::size_t>(cfg.state_dim);
  const std::size_t sc = static_cast<std::size_t>(cfg.scale);
  Layout l;
  add_conv(l, "g.head", c, 3, 3);
  for (int i = 0; i < cfg.effective_n1(); ++i) add_res(l, "g.res" + std::to_string(i), c);
  l.push_back({"g.proj.weight", {c, c * ts * ts}});
  l.push_back({"g.proj.bias", {c}});
  std::size_t fused = 0;
  for (int p = 0; p < 2; ++p) {
    for (int b = 0; b < 3; ++b) {
      if (!branch_enabled(cfg, b)) continue;
      add_ssm_block(l, block_name(p, b), c, n);
      fused += c;
    }
  }
  l.push_back({"tsma.fuse.ln.gamma", {fused}});
  l.push_back({"tsma.fuse.ln.beta", {fused}});
  l.push_back({"tsma.fuse.weight", {c, fused}});
  l.push_back({"tsma.fuse.bias", {c}});
  add_conv(l, "r.head", c, c, 3);
  for (int i = 0; i < cfg.n2_res_blocks; ++i) add_res(l, "r.res" + std::to_string(i), c);
  add_conv(l, "r.tail", 3 * sc * sc, c, 3);
  return l;
}

WeightMap random_weight_map(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  WeightMap map;
  for (const auto& [name, dims] : weight_layout(cfg)) {
    Tensor t(dims);
    if (ends_with(name, ".ln.gamma")) {
      for (float& v : t.values()) v = 1.0f;
    } else if (ends_with(name, ".ln.beta")) {
      // zeros
    } else if (ends_with(name, ".ssm.a")) {
      for (std::size_t i = 0; i < dims[0]; ++i) {
        for (std::size_t k = 0; k < dims[1]; ++k) t.at(i, k) = -static_cast<float>(k + 1);
      }
    } else if (name.find(".ssm.") != std::string::npos) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.channels));
      for (float& v : t.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    } else if (ends_with(name, ".weight")) {
      std::size_t fan_in = 1;
      for (std::size_t k = 1; k < dims.size(); ++k) fan_in *= dims[k];
      double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      // Damp the residual branches so deep stacks stay well scaled.
      if (ends_with(name, ".conv2.weight")) bound *= 0.1;
      for (float& v : t.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    } else {
      for (float& v : t.values()) v = static_cast<float>(rng.uniform(-0.01, 0.01));
    }
    map.emplace(name, std::move(t));
  }
  return map;
}

WeightMap zero_weight_map(const ModelConfig& cfg) {
  WeightMap map;
  for (const auto& [name, dims] : weight_layout(cfg)) map.emplace(name, Tensor(dims));
  return map;
}

ModelWeights weights_from_map(const WeightMap& map, const ModelConfig& cfg) {
  const Layout layout = weight_layout(cfg);
  auto dims_of = [&](const std::string& name) -> const Tensor::Dims& {
    for (const auto& [n, d] : layout) {
      if (n == name) return d;
    }
    throw std::logic_error("no layout entry for " + name);
  };
  auto get = [&](const std::string& name) { return fetch(map, name, dims_of(name)); };
  auto conv = [&](const std::string& name) {
    return Conv2d{get(name + ".weight"), get(name + ".bias"), 1, 1};
  };
  auto res = [&](const std::string& name) {
    return ResBlock{conv(name + ".conv1"), conv(name + ".conv2")};
  };

  ModelWeights w;
  w.g.head = conv("g.head");
  for (int i = 0; i < cfg.effective_n1(); ++i) w.g.blocks.push_back(res("g.res" + std::to_string(i)));
  w.g.proj = Linear{get("g.proj.weight"), get("g.proj.bias")};
  for (int p = 0; p < 2; ++p) {
    for (int b = 0; b < 3; ++b) {
      if (!branch_enabled(cfg, b)) continue;
      const std::string base = block_name(p, b);
      SsmBlockWeights& blk = w.tsma.blocks[p][b];
      blk.ln = LayerNormParams{get(base + ".ln.gamma"), get(base + ".ln.beta")};
      blk.scan = SelectiveScanParams{cfg.channels, cfg.state_dim,
                                     get(base + ".ssm.a"), get(base + ".ssm.w_delta"),
                                     get(base + ".ssm.b_delta"), get(base + ".ssm.w_b"),
                                     get(base + ".ssm.w_c"), get(base + ".ssm.d")};
      blk.scan.validate();
    }
  }
  w.tsma.fuse_ln = LayerNormParams{get("tsma.fuse.ln.gamma"), get("tsma.fuse.ln.beta")};
  w.tsma.fuse = Linear{get("tsma.fuse.weight"), get("tsma.fuse.bias")};
  w.r.head = conv("r.head");
  for (int i = 0; i < cfg.n2_res_blocks; ++i) w.r.blocks.push_back(res("r.res" + std::to_string(i)));
  w.r.tail = conv("r.tail");
  return w;
}

void save_bundle(const std::filesystem::path& dir, const WeightMap& map) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "tstf-bundle";
  manifest["version"] = 1;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const auto& [name, t] : map) {
    const std::string file = name + ".tstf";
    save_tstf(dir / file, t);
    tensors[name] = file;
  }
  manifest["tensors"] = std::move(tensors);
  std::ofstream os(dir / "manifest.json");
  if (!os) throw FormatError("cannot write manifest in " + dir.string());
  os << manifest.dump(2) << '\n';
}

WeightMap load_bundle(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw FormatError("no manifest.json in " + dir.string());
  std::stringstream ss;
  ss << is.rdbuf();
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
  if (!manifest.contains("tensors") || !manifest["tensors"].is_object()) {
    throw FormatError("manifest has no tensors object");
  }
  WeightMap map;
  for (const auto& [name, file] : manifest["tensors"].items()) {
    if (!file.is_string()) throw FormatError("manifest entry " + name + " is not a path");
    const std::filesystem::path rel = file.get<std::string>();
    if (rel.is_absolute() || rel.string().find("..") != std::string::npos) {
      throw FormatError("manifest entry " + name + " escapes the bundle");
    }
    map.emplace(name, load_tstf(dir / rel));
  }
  return map;
}

}  // namespace tsm
