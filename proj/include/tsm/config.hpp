#pragma once

#include <string>

namespace tsm {

struct ModelConfig {
  int n1_res_blocks = 2;
  int n2_res_blocks = 13;
  int channels = 32;
  int token_size = 4;
  int window_size = 8;  // in tokens
  int s_selected = 3;
  int scale = 4;
  int temporal_window = 4;  // frames, current one included
  int state_dim = 8;
  int flow_radius = 2;

  // Divide by squared norms in the similarity instead of plain cosine.
  bool squared_norm_similarity = false;
  // One x4 pixel shuffle instead of two x2 stages.
  bool single_stage_shuffle = false;

  // Ablation switches.
  bool use_trajectory = true;
  bool use_intra_branch = true;
  bool use_inter_branch = true;
  bool intra_shift = true;
  bool inter_shift = true;

  // Throws std::invalid_argument on inconsistent values.
  void validate() const;
  // Selection count actually used (0 when trajectories are disabled).
  int effective_s() const { return use_trajectory ? s_selected : 0; }
  // Without trajectories the tokenizer keeps only its head conv.
  int effective_n1() const { return use_trajectory ? n1_res_blocks : 0; }
};

ModelConfig config_from_json(const std::string& text);
std::string config_to_json(const ModelConfig& config);

// Named ablation presets: "full", "v1.1", "v1.3" .. "v1.8".
ModelConfig ablation_preset(const std::string& name, ModelConfig base = {});

}  // namespace tsm
