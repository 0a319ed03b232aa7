#include "tsm/config.hpp"

#include <stdexcept>

#include <json.hpp>

#include "tsm/scanorder.hpp"

namespace tsm {

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("config: " + msg);
  };
  need(n1_res_blocks >= 0 && n2_res_blocks >= 0, "residual block counts must be >= 0");
  need(channels >= 1, "channels must be >= 1");
  need(token_size >= 1, "token_size must be >= 1");
  need(is_power_of_two(window_size), "window_size must be a power of two");
  need(scale >= 1, "scale must be >= 1");
  need(single_stage_shuffle || is_power_of_two(scale),
       "two-stage pixel shuffle needs a power-of-two scale");
  need(temporal_window >= 1, "temporal_window must be >= 1");
  need(s_selected >= 0, "s_selected must be >= 0");
  need(!use_trajectory || s_selected <= temporal_window - 1,
       "s_selected must not exceed temporal_window - 1");
  need(state_dim >= 1, "state_dim must be >= 1");
  need(flow_radius >= 0, "flow_radius must be >= 0");
}

ModelConfig config_from_json(const std::string& text) {
  ModelConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected an object");
  auto get_int = [&](const char* key, int& dst) {
    if (j.contains(key)) dst = j.at(key).get<int>();
  };
  auto get_bool = [&](const char* key, bool& dst) {
    if (j.contains(key)) dst = j.at(key).get<bool>();
  };
  static const char* kKnown[] = {
      "n1_res_blocks", "n2_res_blocks", "channels", "token_size",
      "window_size", "s_selected", "scale", "temporal_window", "state_dim",
      "flow_radius", "squared_norm_similarity", "single_stage_shuffle",
      "use_trajectory", "use_intra_branch", "use_inter_branch", "intra_shift",
      "inter_shift"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : kKnown) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  try {
    get_int("n1_res_blocks", c.n1_res_blocks);
    get_int("n2_res_blocks", c.n2_res_blocks);
    get_int("channels", c.channels);
    get_int("token_size", c.token_size);
    get_int("window_size", c.window_size);
    get_int("s_selected", c.s_selected);
    get_int("scale", c.scale);
    get_int("temporal_window", c.temporal_window);
    get_int("state_dim", c.state_dim);
    get_int("flow_radius", c.flow_radius);
    get_bool("squared_norm_similarity", c.squared_norm_similarity);
    get_bool("single_stage_shuffle", c.single_stage_shuffle);
    get_bool("use_trajectory", c.use_trajectory);
    get_bool("use_intra_branch", c.use_intra_branch);
    get_bool("use_inter_branch", c.use_inter_branch);
    get_bool("intra_shift", c.intra_shift);
    get_bool("inter_shift", c.inter_shift);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["n1_res_blocks"] = c.n1_res_blocks;
  j["n2_res_blocks"] = c.n2_res_blocks;
  j["channels"] = c.channels;
  j["token_size"] = c.token_size;
  j["window_size"] = c.window_size;
  j["s_selected"] = c.s_selected;
  j["scale"] = c.scale;
  j["temporal_window"] = c.temporal_window;
  j["state_dim"] = c.state_dim;
  j["flow_radius"] = c.flow_radius;
  j["squared_norm_similarity"] = c.squared_norm_similarity;
  j["single_stage_shuffle"] = c.single_stage_shuffle;
  j["use_trajectory"] = c.use_trajectory;
  j["use_intra_branch"] = c.use_intra_branch;
  j["use_inter_branch"] = c.use_inter_branch;
  j["intra_shift"] = c.intra_shift;
  j["inter_shift"] = c.inter_shift;
  return j.dump(2);
}

ModelConfig ablation_preset(const std::string& name, ModelConfig base) {
  if (name == "full") return base;
  if (name == "v1.1") {
    base.use_trajectory = false;
  } else if (name == "v1.3") {
    base.use_intra_branch = false;
  } else if (name == "v1.4") {
    base.use_inter_branch = false;
  } else if (name == "v1.5") {
    base.use_intra_branch = false;
    base.use_inter_branch = false;
  } else if (name == "v1.6") {
    base.intra_shift = false;
  } else if (name == "v1.7") {
    base.inter_shift = false;
  } else if (name == "v1.8") {
    base.intra_shift = false;
    base.inter_shift = false;
  } else {
    throw std::invalid_argument("unknown ablation preset: " + name);
  }
  return base;
}

}  // namespace tsm
