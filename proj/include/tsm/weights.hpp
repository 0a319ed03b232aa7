#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tsm/config.hpp"
#include "tsm/nn.hpp"
#include "tsm/ssm.hpp"
#include "tsm/tensor.hpp"
#include "tsm/trajectory.hpp"

namespace tsm {

using WeightMap = std::map<std::string, Tensor>;

struct TsmaWeights {
  // Indexed [path][branch]; branch 0 = trunk, 1 = intra, 2 = inter.
  // Disabled branches are left empty.
  SsmBlockWeights blocks[2][3];
  LayerNormParams fuse_ln;
  Linear fuse;  // [C, fused width]
};

struct ReconWeights {
  Conv2d head;
  std::vector<ResBlock> blocks;
  Conv2d tail;  // C -> 3 * scale^2
};

struct ModelWeights {
  TokenizerWeights g;
  TsmaWeights tsma;
  ReconWeights r;
};

// Every tensor the config needs, in a fixed order.
std::vector<std::pair<std::string, Tensor::Dims>> weight_layout(
    const ModelConfig& config);

WeightMap random_weight_map(const ModelConfig& config, std::uint64_t seed);
WeightMap zero_weight_map(const ModelConfig& config);

// Throws std::invalid_argument naming the first missing or misshaped tensor.
ModelWeights weights_from_map(const WeightMap& map, const ModelConfig& config);

// A directory holding manifest.json ({"tensors": {name: file}}) plus one
// TSTF file per tensor.
void save_bundle(const std::filesystem::path& dir, const WeightMap& map);
WeightMap load_bundle(const std::filesystem::path& dir);

}  // namespace tsm
