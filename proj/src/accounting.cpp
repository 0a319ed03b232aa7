#include "tsm/accounting.hpp"

#include <cstdlib>
#include <stdexcept>

#include <json.hpp>

namespace tsm {

LayerCount conv_count(const std::string& name, std::int64_t cin,
                      std::int64_t cout, std::int64_t kernel, std::int64_t h,
                      std::int64_t w) {
  return {name, cout * cin * kernel * kernel + cout,
          cout * cin * kernel * kernel * h * w};
}

CountReport count_params_macs(const ModelConfig& cfg, int h, int w) {
  cfg.validate();
  if (h < 1 || w < 1 || h % cfg.token_size != 0 || w % cfg.token_size != 0) {
    throw std::invalid_argument("LR size must be positive and divisible by the token size");
  }
  const std::int64_t c = cfg.channels, ts = cfg.token_size, n = cfg.state_dim;
  const std::int64_t tokens = static_cast<std::int64_t>(h / ts) * (w / ts);
  const std::int64_t s = cfg.effective_s();
  const std::int64_t sc = cfg.scale;
  CountReport rep;
  auto push_conv = [&](LayerCount lc) {
    rep.conv_macs += lc.macs;
    rep.layers.push_back(std::move(lc));
  };

  push_conv(conv_count("g.head", 3, c, 3, h, w));
  for (int i = 0; i < cfg.effective_n1(); ++i) {
    const std::string b = "g.res" + std::to_string(i);
    push_conv(conv_count(b + ".conv1", c, c, 3, h, w));
    push_conv(conv_count(b + ".conv2", c, c, 3, h, w));
  }
  rep.layers.push_back({"g.proj", c * c * ts * ts + c, tokens * c * c * ts * ts});
  if (s > 0) {
    // dot product and two norms per candidate
    rep.layers.push_back({"select", 0, tokens * (cfg.temporal_window - 1) * 3 * c});
  }

  // Per scan step: delta projection, B and C projections, state update
  // (decay and input), readout, skip.
  const std::int64_t step = c * c + 2 * n * c + 2 * c * n + c * n + c;
  const std::int64_t block_params = 2 * c + c * n + c * c + c + 2 * n * c + c;
  const std::int64_t length = tokens * (s + 1);
  int blocks = 0;
  const char* names[3] = {"trunk", "intra", "inter"};
  for (int p = 0; p < 2; ++p) {
    for (int b = 0; b < 3; ++b) {
      if ((b == 1 && !cfg.use_intra_branch) || (b == 2 && !cfg.use_inter_branch)) continue;
      ++blocks;
      rep.layers.push_back({"tsma.p" + std::to_string(p + 1) + "." + names[b],
                            block_params, length * step});
    }
  }
  const std::int64_t fused = blocks * c;
  rep.layers.push_back({"tsma.fuse", 2 * fused + fused * c + c, tokens * fused * c});
  // Shares the projection weights, so no parameters of its own.
  rep.layers.push_back({"untokenize", 0, tokens * c * c * ts * ts});

  push_conv(conv_count("r.head", c, c, 3, h, w));
  for (int i = 0; i < cfg.n2_res_blocks; ++i) {
    const std::string b = "r.res" + std::to_string(i);
    push_conv(conv_count(b + ".conv1", c, c, 3, h, w));
    push_conv(conv_count(b + ".conv2", c, c, 3, h, w));
  }
  push_conv(conv_count("r.tail", c, 3 * sc * sc, 3, h, w));
  // Separable 4-tap passes: rows at LR height, then full output.
  rep.layers.push_back({"bicubic", 0, 3 * (h * w * sc * 4 + h * sc * w * sc * 4)});

  for (const auto& l : rep.layers) {
    rep.params += l.params;
    rep.macs += l.macs;
  }
  return rep;
}

Calibration calibrate_channels(ModelConfig base, std::int64_t target, int h,
                               int w, int c_min, int c_max) {
  if (c_min < 1 || c_max < c_min) throw std::invalid_argument("bad channel range");
  Calibration best;
  std::int64_t best_gap = -1;
  for (int c = c_min; c <= c_max; ++c) {
    base.channels = c;
    const CountReport r = count_params_macs(base, h, w);
    const std::int64_t gap = std::llabs(r.params - target);
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      best = {c, r.params, r.macs};
    }
  }
  return best;
}

std::string count_to_json(const CountReport& report, const ModelConfig& cfg,
                          int h, int w, const Calibration* calibration) {
  nlohmann::ordered_json j;
  j["lr_height"] = h;
  j["lr_width"] = w;
  j["channels"] = cfg.channels;
  j["state_dim"] = cfg.state_dim;
  j["params"] = report.params;
  j["macs"] = report.macs;
  j["conv_macs"] = report.conv_macs;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : report.layers) {
    layers.push_back({{"name", l.name}, {"params", l.params}, {"macs", l.macs}});
  }
  j["layers"] = std::move(layers);
  if (calibration) {
    nlohmann::ordered_json cal;
    cal["target_params"] = 3000000;
    cal["channels"] = calibration->channels;
    cal["params"] = calibration->params;
    cal["macs"] = calibration->macs;
    cal["gmacs"] = static_cast<double>(calibration->macs) / 1e9;
    cal["reference_gmacs"] = 112;
    cal["note"] =
        "diagnostic only: internal widths are unknown, so the match is not a pass/fail gate";
    j["calibration"] = std::move(cal);
  }
  return j.dump(2);
}

}  // namespace tsm
