#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsm/config.hpp"

namespace tsm {

struct LayerCount {
  std::string name;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

struct CountReport {
  std::vector<LayerCount> layers;
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::int64_t conv_macs = 0;
};

LayerCount conv_count(const std::string& name, std::int64_t cin,
                      std::int64_t cout, std::int64_t kernel, std::int64_t h,
                      std::int64_t w);

// One online step on an LR frame of h x w: G runs on the current frame only
// (previous token fields are cached), flow estimation is not counted.
CountReport count_params_macs(const ModelConfig& config, int h, int w);

struct Calibration {
  int channels = 0;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

// Channel width in [c_min, c_max] whose parameter count is closest to
// target (ties to the smaller width).
Calibration calibrate_channels(ModelConfig base, std::int64_t target, int h,
                               int w, int c_min = 16, int c_max = 128);

std::string count_to_json(const CountReport& report, const ModelConfig& config,
                          int h, int w, const Calibration* calibration);

}  // namespace tsm
