// tsm: command-line front end for the scan, discontinuity, trajectory, SSM
// and model routines. stdout always carries one JSON report envelope;
// other artifacts go only to paths named by flags.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsm/accounting.hpp"
#include "tsm/config.hpp"
#include "tsm/discontinuity.hpp"
#include "tsm/losses.hpp"
#include "tsm/model.hpp"
#include "tsm/nn.hpp"
#include "tsm/parallel.hpp"
#include "tsm/random.hpp"
#include "tsm/scanorder.hpp"
#include "tsm/ssm.hpp"
#include "tsm/tensor_io.hpp"
#include "tsm/trajectory.hpp"
#include "tsm/weights.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Bad user input: maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

struct Report {
  std::string command;
  std::map<std::string, std::string> inputs;  // sorted for stable output
  json payload = json::object();

  void digest(const fs::path& p, const std::string& prefix = "") {
    inputs[prefix + p.filename().string()] = sha256_file(p);
  }
  void digest_dir(const std::vector<fs::path>& files) {
    for (const auto& f : files) digest(f, f.parent_path().filename().string() + "/");
  }
  std::string dump() const {
    json j;
    j["tool"] = "tsm";
    j["version"] = kVersion;
    j["command"] = command;
    json in = json::object();
    for (const auto& [k, v] : inputs) in[k] = v;
    j["inputs"] = std::move(in);
    j["payload"] = payload;
    return j.dump(2);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot write " + path.string());
  os << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<fs::path> list_inputs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".tstf") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw UsageError("no .pgm/.ppm/.tstf files in " + dir.string());
  return out;
}

// Gray frames are replicated to three channels.
tsm::Tensor as_rgb(const tsm::Tensor& t) {
  if (t.rank() != 3) throw UsageError("frames must be [C, H, W]");
  if (t.dim(0) == 3) return t;
  if (t.dim(0) != 1) throw UsageError("frames must have 1 or 3 channels");
  tsm::Tensor out({3, t.dim(1), t.dim(2)});
  for (std::size_t c = 0; c < 3; ++c) {
    std::copy_n(t.data(), t.size(), out.data() + c * t.size());
  }
  return out;
}

tsm::ModelConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return tsm::config_from_json(read_text(path));
}

json tensor_rows(const tsm::Tensor& t) {
  json rows = json::array();
  const std::size_t w = t.dim(t.rank() - 1);
  for (std::size_t i = 0; i < t.size() / w; ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < w; ++k) row.push_back(t[i * w + k]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- scan ----------------------------------------------------------------

struct ScanGenArgs {
  std::string variant = "scan1";
  int size = 8;
  int window = 0;
  std::string out, svg;
};

void run_scan_gen(const ScanGenArgs& a, Report& rep) {
  const tsm::ScanVariant v = tsm::parse_variant(a.variant);
  const tsm::ScanOrder order = a.window > 0 ? tsm::window_scan(v, a.size, a.window)
                                            : tsm::generate_scan(v, a.size);
  if (!a.out.empty()) write_text(a.out, tsm::scan_to_json(order) + "\n");
  if (!a.svg.empty()) write_text(a.svg, tsm::scan_to_svg(order));
  rep.payload = json::parse(tsm::scan_to_json(order));
  rep.payload["orientation"] = tsm::variant_orientation(v);
}

struct ScanCheckArgs {
  std::string in;
};

int run_scan_check(const ScanCheckArgs& a, Report& rep) {
  rep.digest(a.in);
  const tsm::ScanOrder order = tsm::scan_from_json(read_text(a.in));
  const bool bij = tsm::is_bijection(order);
  const bool cont = tsm::is_continuous(order);
  rep.payload["variant"] = order.label;
  rep.payload["size"] = order.size;
  rep.payload["bijection"] = bij;
  rep.payload["continuous"] = cont;
  bool quadrants = bij;
  if (bij && order.size >= 2) {
    for (int r = 0; r + 1 < order.size; r += 2) {
      for (int c = 0; c + 1 < order.size; c += 2) {
        quadrants = quadrants && tsm::region_degree(order, {{r, c}}) == 0;
      }
    }
  }
  rep.payload["aligned_quadrants_consecutive"] = quadrants;
  return bij ? 0 : 1;
}

// ---- disc ----------------------------------------------------------------

struct DiscAnalyzeArgs {
  std::string first = "scan1", shift = "U1", second = "scan3";
  int grid = 8, window = 4;
  std::string out, svg;
};

void run_disc_analyze(const DiscAnalyzeArgs& a, Report& rep) {
  const auto r = tsm::analyze(tsm::parse_variant(a.first), tsm::parse_shift(a.shift),
                              tsm::parse_variant(a.second), a.grid, a.window);
  const std::string text = tsm::report_to_json(r);
  if (!a.out.empty()) write_text(a.out, text + "\n");
  if (!a.svg.empty()) write_text(a.svg, tsm::report_to_svg(r));
  rep.payload = json::parse(text);
}

struct DiscSearchArgs {
  int grid = 8, window = 4;
  std::vector<std::string> shifts;
  std::string csv;
  int top = 10;
};

void run_disc_search(const DiscSearchArgs& a, Report& rep) {
  std::vector<tsm::ShiftSpec> shifts;
  for (const auto& s : a.shifts) shifts.push_back(tsm::parse_shift(s));
  if (shifts.empty()) shifts = tsm::default_shifts();
  const auto rows = tsm::search_procedures(a.grid, a.window, shifts);
  if (!a.csv.empty()) write_text(a.csv, tsm::search_to_csv(rows));
  int max_intra = 0, max_inter = 0;
  for (const auto& r : rows) {
    max_intra = std::max(max_intra, r.delta_intra);
    max_inter = std::max(max_inter, r.delta_inter);
  }
  rep.payload["grid"] = a.grid;
  rep.payload["window"] = a.window;
  rep.payload["procedures"] = rows.size();
  rep.payload["max_delta"] = rows.front().delta;
  rep.payload["max_delta_intra"] = max_intra;
  rep.payload["max_delta_inter"] = max_inter;
  json top = json::array();
  for (int i = 0; i < a.top && i < static_cast<int>(rows.size()); ++i) {
    const auto& r = rows[i];
    top.push_back({{"first", r.first}, {"shift", r.shift}, {"second", r.second},
                   {"delta_intra", r.delta_intra}, {"delta_inter", r.delta_inter},
                   {"delta", r.delta}});
  }
  rep.payload["top"] = std::move(top);
}

// ---- traj ----------------------------------------------------------------

struct TrajSelectArgs {
  std::string frames, flows, out_dir;
  int temporal_window = 4, s = 3, token_size = 4, radius = 2;
  bool squared_norm = false;
};

void run_traj_select(const TrajSelectArgs& a, Report& rep) {
  const auto files = list_inputs(a.frames);
  rep.digest_dir(files);
  std::vector<tsm::Tensor> frames;
  for (const auto& f : files) frames.push_back(tsm::load_any(f));
  for (const auto& f : frames) {
    if (f.rank() != 3 || f.dims() != frames.back().dims()) {
      throw UsageError("all frames must be [C, H, W] with equal dims");
    }
  }
  std::vector<tsm::Tensor> flows;
  if (!a.flows.empty()) {
    const auto ff = list_inputs(a.flows);
    rep.digest_dir(ff);
    for (const auto& f : ff) flows.push_back(tsm::load_tstf(f));
    if (flows.size() + 1 != frames.size()) {
      throw UsageError("need one flow field per frame transition (" +
                       std::to_string(frames.size() - 1) + ")");
    }
  }
  const int tw = a.temporal_window;
  if (tw < 1 || a.s < 0 || a.s > tw - 1) {
    throw UsageError("need 0 <= s <= T - 1");
  }
  const int ts = a.token_size;
  const tsm::Tensor& cur = frames.back();
  const int h = static_cast<int>(cur.dim(1)), w = static_cast<int>(cur.dim(2));
  if (ts < 1 || h % ts || w % ts) throw UsageError("frame size not divisible by token size");

  std::vector<int> idx(tw);
  for (int j = 0; j < tw; ++j) idx[j] = std::max(0, static_cast<int>(frames.size()) - tw + j);
  auto field_of = [&](int k) {
    tsm::TokenField f;
    f.frame = k;
    f.ht = h / ts;
    f.wt = w / ts;
    f.tokens = tsm::patchify(frames[k], ts);
    return f;
  };
  tsm::TrajectorySet traj = tsm::initial_trajectories(h / ts, w / ts, ts, tw, 0);
  for (int j = 1; j < tw; ++j) {
    tsm::Tensor flow({2, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    if (idx[j] != idx[j - 1]) {
      flow = flows.empty() ? tsm::block_matching_flow(frames[idx[j]], frames[idx[j - 1]], a.radius)
                           : flows[idx[j] - 1];
    }
    traj = tsm::propagate_trajectories(traj, flow);
  }
  const tsm::TokenField q = field_of(idx[tw - 1]);
  std::vector<tsm::TokenField> prev;
  for (int hh = 1; hh < tw; ++hh) prev.push_back(field_of(idx[tw - 1 - hh]));
  const auto sel = tsm::select_tokens(q, prev, traj, a.s, a.squared_norm);

  rep.payload["tokens"] = sel.tokens;
  rep.payload["s"] = sel.s;
  rep.payload["temporal_window"] = tw;
  rep.payload["similarity"] = a.squared_norm ? "squared_norm" : "cosine";
  json offsets = json::array();
  for (std::size_t i = 0; i < sel.tokens; ++i) {
    json row = json::array();
    for (int j = 0; j < sel.s; ++j) row.push_back(sel.offsets[i * sel.s + j]);
    offsets.push_back(std::move(row));
  }
  rep.payload["offsets"] = std::move(offsets);
  rep.payload["scores"] = sel.s > 0 ? tensor_rows(sel.scores) : json::array();
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    if (sel.s > 0) {
      tsm::save_tstf(fs::path(a.out_dir) / "selected.tstf", sel.selected);
      tsm::save_tstf(fs::path(a.out_dir) / "scores.tstf", sel.scores);
    }
    std::vector<float> coords(traj.coords.begin(), traj.coords.end());
    tsm::save_tstf(fs::path(a.out_dir) / "trajectories.tstf",
                   tsm::Tensor({static_cast<std::size_t>(traj.ht),
                                static_cast<std::size_t>(traj.wt),
                                static_cast<std::size_t>(traj.slots), 2},
                               std::move(coords)));
  }
}

// ---- ssm -----------------------------------------------------------------

struct SsmRunArgs {
  std::string seq, params, out;
  int state_dim = 8;
};

// params: a directory bundle with a, w_delta, b_delta, w_b, w_c, d. Without
// one, seeded random parameters are used.
void run_ssm_run(const SsmRunArgs& a, std::uint64_t seed, Report& rep) {
  rep.digest(a.seq);
  const tsm::Tensor seq = tsm::load_tstf(a.seq);
  if (seq.rank() != 2) throw UsageError("sequence must be [L, C]");
  tsm::SelectiveScanParams p;
  if (!a.params.empty()) {
    const auto map = tsm::load_bundle(a.params);
    rep.digest(fs::path(a.params) / "manifest.json", fs::path(a.params).filename().string() + "/");
    auto get = [&](const char* name) {
      auto it = map.find(name);
      if (it == map.end()) throw UsageError(std::string("missing parameter tensor: ") + name);
      return it->second;
    };
    p.a = get("a");
    p.channels = static_cast<int>(p.a.dim(0));
    p.state_dim = static_cast<int>(p.a.rank() == 2 ? p.a.dim(1) : 0);
    p.w_delta = get("w_delta");
    p.b_delta = get("b_delta");
    p.w_b = get("w_b");
    p.w_c = get("w_c");
    p.d = get("d");
  } else {
    tsm::Rng rng(seed);
    p = tsm::random_scan_params(static_cast<int>(seq.dim(1)), a.state_dim, rng);
  }
  const tsm::Tensor y = tsm::selective_scan_forward(p, seq);
  if (!a.out.empty()) tsm::save_tstf(a.out, y);
  double max_abs = 0.0;
  for (float v : y.values()) max_abs = std::max(max_abs, static_cast<double>(std::fabs(v)));
  rep.payload["length"] = seq.dim(0);
  rep.payload["channels"] = seq.dim(1);
  rep.payload["state_dim"] = p.state_dim;
  rep.payload["max_abs_output"] = max_abs;
  rep.payload["finite"] = y.all_finite();
}

struct GradCheckArgs {
  int instances = 20, length = 16, channels = 4, state_dim = 8;
  double step = 1e-3, tolerance = 1e-4;
};

double rel_err(double a, double n) {
  return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-3});
}

int run_grad_check(const GradCheckArgs& a, std::uint64_t seed, Report& rep) {
  tsm::Rng rng(seed);
  double worst = 0.0;
  for (int inst = 0; inst < a.instances; ++inst) {
    tsm::ScanParams64 p = tsm::to_f64(tsm::random_scan_params(a.channels, a.state_dim, rng));
    const std::size_t n = static_cast<std::size_t>(a.length) * a.channels;
    std::vector<double> u(n), dy(n);
    for (auto& v : u) v = rng.uniform(-1, 1);
    for (auto& v : dy) v = rng.uniform(-1, 1);
    tsm::ScanCache cache;
    tsm::scan_forward64(p, u, a.length, &cache);
    const auto g = tsm::scan_backward64(p, u, a.length, cache, dy);
    auto loss = [&](const tsm::ScanParams64& pp, const std::vector<double>& uu) {
      const auto y = tsm::scan_forward64(pp, uu, a.length);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * dy[i];
      return acc;
    };
    auto probe = [&](std::vector<double>& x, const std::vector<double>& grad, bool is_u) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + a.step;
        const double fp = is_u ? loss(p, x) : loss(p, u);
        x[i] = keep - a.step;
        const double fm = is_u ? loss(p, x) : loss(p, u);
        x[i] = keep;
        worst = std::max(worst, rel_err(grad[i], (fp - fm) / (2 * a.step)));
      }
    };
    probe(u, g.u, true);
    probe(p.a, g.a, false);
    probe(p.w_delta, g.w_delta, false);
    probe(p.b_delta, g.b_delta, false);
    probe(p.w_b, g.w_b, false);
    probe(p.w_c, g.w_c, false);
    probe(p.d, g.d, false);
  }
  const bool pass = worst < a.tolerance;
  rep.payload["instances"] = a.instances;
  rep.payload["length"] = a.length;
  rep.payload["channels"] = a.channels;
  rep.payload["state_dim"] = a.state_dim;
  rep.payload["step"] = a.step;
  rep.payload["max_relative_error"] = worst;
  rep.payload["tolerance"] = a.tolerance;
  rep.payload["pass"] = pass;
  return pass ? 0 : 1;
}

// ---- model ---------------------------------------------------------------

struct ModelForwardArgs {
  std::string frames, weights, config, out, flows, save_weights;
  bool zero_recon = false;
};

void run_model_forward(const ModelForwardArgs& a, std::uint64_t seed, Report& rep) {
  const tsm::ModelConfig cfg = load_config(a.config);
  if (!a.config.empty()) rep.digest(a.config);
  const auto files = list_inputs(a.frames);
  rep.digest_dir(files);
  std::vector<tsm::Tensor> frames;
  for (const auto& f : files) frames.push_back(as_rgb(tsm::load_any(f)));
  std::vector<tsm::Tensor> flows;
  if (!a.flows.empty()) {
    const auto ff = list_inputs(a.flows);
    rep.digest_dir(ff);
    for (const auto& f : ff) flows.push_back(tsm::load_tstf(f));
  }
  tsm::WeightMap map;
  if (!a.weights.empty()) {
    map = tsm::load_bundle(a.weights);
    rep.digest(fs::path(a.weights) / "manifest.json", fs::path(a.weights).filename().string() + "/");
  } else {
    map = tsm::random_weight_map(cfg, seed);
  }
  if (a.zero_recon) {
    for (auto& [name, t] : map) {
      if (name.rfind("r.", 0) == 0) t = tsm::Tensor(t.dims());
    }
  }
  if (!a.save_weights.empty()) tsm::save_bundle(a.save_weights, map);
  const tsm::ModelWeights weights = tsm::weights_from_map(map, cfg);
  const auto res = tsm::ts_mamba_forward(frames, weights, cfg, flows);
  if (!a.out.empty()) {
    const fs::path out(a.out);
    if (out.extension() == ".tstf") {
      tsm::save_tstf(out, res.sr);
    } else {
      tsm::save_pnm(out, res.sr);
    }
  }
  const tsm::Tensor bic = tsm::bicubic_upsample(frames.back(), cfg.scale);
  rep.payload["frames"] = frames.size();
  rep.payload["output_dims"] = res.sr.dims();
  rep.payload["weights"] = a.weights.empty() ? "random" : "bundle";
  rep.payload["seed"] = seed;
  rep.payload["finite"] = res.sr.all_finite();
  const double p = tsm::psnr(res.sr, bic);
  rep.payload["equals_bicubic"] = res.sr == bic;
  rep.payload["psnr_vs_bicubic_db"] = std::isinf(p) ? json(nullptr) : json(p);
  rep.payload["selection_s"] = res.selection.s;
  rep.payload["graph"] = tsm::describe_tsma(cfg);
}

struct ModelCountArgs {
  std::string config;
  int height = 180, width = 320;
  bool calibrate = false;
};

void run_model_count(const ModelCountArgs& a, Report& rep) {
  const tsm::ModelConfig cfg = load_config(a.config);
  if (!a.config.empty()) rep.digest(a.config);
  const auto counts = tsm::count_params_macs(cfg, a.height, a.width);
  tsm::Calibration cal;
  if (a.calibrate) cal = tsm::calibrate_channels(cfg, 3000000, a.height, a.width);
  rep.payload = json::parse(
      tsm::count_to_json(counts, cfg, a.height, a.width, a.calibrate ? &cal : nullptr));
}

// ---- loss ----------------------------------------------------------------

struct LossEvalArgs {
  std::string sr, hr, lr_traj, hr_traj;
  double epsilon = 1e-4, lambda = 0.1;
  int scale = 4;
};

tsm::TrajectorySet traj_from_tensor(const tsm::Tensor& t) {
  if (t.rank() != 4 || t.dim(3) != 2) throw UsageError("trajectory tensor must be [Ht, Wt, slots, 2]");
  tsm::TrajectorySet tr;
  tr.ht = static_cast<int>(t.dim(0));
  tr.wt = static_cast<int>(t.dim(1));
  tr.slots = static_cast<int>(t.dim(2));
  tr.coords.assign(t.values().begin(), t.values().end());
  return tr;
}

void run_loss_eval(const LossEvalArgs& a, Report& rep) {
  rep.digest(a.sr);
  rep.digest(a.hr, "hr:");
  const double spa = tsm::charbonnier_loss(tsm::load_any(a.sr), tsm::load_any(a.hr), a.epsilon);
  double trj = 0.0;
  const bool have_traj = !a.lr_traj.empty() || !a.hr_traj.empty();
  if (have_traj) {
    if (a.lr_traj.empty() || a.hr_traj.empty()) {
      throw UsageError("--lr-traj and --hr-traj must be given together");
    }
    rep.digest(a.lr_traj, "lr_traj:");
    rep.digest(a.hr_traj, "hr_traj:");
    trj = tsm::trajectory_loss(traj_from_tensor(tsm::load_tstf(a.lr_traj)),
                               traj_from_tensor(tsm::load_tstf(a.hr_traj)), a.scale);
  }
  rep.payload["epsilon"] = a.epsilon;
  rep.payload["lambda"] = a.lambda;
  rep.payload["spatial"] = spa;
  rep.payload["trajectory"] = have_traj ? json(trj) : json(nullptr);
  rep.payload["total"] = tsm::total_loss(spa, trj, a.lambda);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory-aware shifted SSM toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "worker threads (default: TSM_THREADS or 1)");
  app.add_option("--seed", seed, "seed for randomized commands");
  app.set_version_flag("--version", kVersion);

  auto* scan = app.add_subcommand("scan", "Hilbert scan orders")->require_subcommand(1);
  ScanGenArgs sg;
  auto* scan_gen = scan->add_subcommand("gen", "generate a scan order");
  scan_gen->add_option("--variant", sg.variant, "scan1..scan4");
  scan_gen->add_option("--size", sg.size, "cells per side (power of two)");
  scan_gen->add_option("--window", sg.window, "tile the grid with windows of this size");
  scan_gen->add_option("--out", sg.out, "order JSON path");
  scan_gen->add_option("--svg", sg.svg, "SVG rendering path");
  ScanCheckArgs sc;
  auto* scan_check = scan->add_subcommand("check", "validate a scan order JSON");
  scan_check->add_option("--in", sc.in, "order JSON")->required();

  auto* disc = app.add_subcommand("disc", "discontinuity analysis")->require_subcommand(1);
  DiscAnalyzeArgs da;
  auto* disc_analyze = disc->add_subcommand("analyze", "report one Scan-Shift-Scan procedure");
  disc_analyze->add_option("--first", da.first);
  disc_analyze->add_option("--shift", da.shift, "e.g. U1, UL3");
  disc_analyze->add_option("--second", da.second);
  disc_analyze->add_option("--grid", da.grid);
  disc_analyze->add_option("--window", da.window);
  disc_analyze->add_option("--out", da.out, "report JSON path");
  disc_analyze->add_option("--svg", da.svg, "annotated SVG path");
  DiscSearchArgs ds;
  auto* disc_search = disc->add_subcommand("search", "rank all procedures");
  disc_search->add_option("--grid", ds.grid);
  disc_search->add_option("--window", ds.window);
  disc_search->add_option("--shifts", ds.shifts, "shift list (default U/D/L/R/UL/UR/DL/DR x 1..3)")
      ->delimiter(',');
  disc_search->add_option("--csv", ds.csv, "CSV output path");
  disc_search->add_option("--top", ds.top, "rows echoed in the report");

  auto* traj = app.add_subcommand("traj", "trajectories and token selection")->require_subcommand(1);
  TrajSelectArgs ts;
  auto* traj_select = traj->add_subcommand("select", "select tokens along trajectories");
  traj_select->add_option("--frames", ts.frames, "directory of frames, oldest first by name")->required();
  traj_select->add_option("--flows", ts.flows, "directory of TSTF flow fields");
  traj_select->add_option("--T", ts.temporal_window, "temporal window including the current frame");
  traj_select->add_option("--s", ts.s, "tokens to select");
  traj_select->add_option("--token-size", ts.token_size);
  traj_select->add_option("--radius", ts.radius, "block matching radius");
  traj_select->add_flag("--squared-norm", ts.squared_norm, "divide by squared norms");
  traj_select->add_option("--out-dir", ts.out_dir, "directory for TSTF outputs");

  auto* ssm = app.add_subcommand("ssm", "selective scan")->require_subcommand(1);
  SsmRunArgs sr;
  auto* ssm_run = ssm->add_subcommand("run", "run the selective scan on a sequence");
  ssm_run->add_option("--seq", sr.seq, "TSTF [L, C]")->required();
  ssm_run->add_option("--params", sr.params, "parameter bundle directory");
  ssm_run->add_option("--state-dim", sr.state_dim, "state size for random parameters");
  ssm_run->add_option("--out", sr.out, "TSTF output path");

  auto* grad = app.add_subcommand("grad", "gradient verification")->require_subcommand(1);
  GradCheckArgs gc;
  auto* grad_check = grad->add_subcommand("check", "analytic vs finite-difference gradients");
  grad_check->add_option("--instances", gc.instances);
  grad_check->add_option("--length", gc.length);
  grad_check->add_option("--channels", gc.channels);
  grad_check->add_option("--state-dim", gc.state_dim);
  grad_check->add_option("--step", gc.step);
  grad_check->add_option("--tolerance", gc.tolerance);

  auto* model = app.add_subcommand("model", "full forward pass")->require_subcommand(1);
  ModelForwardArgs mf;
  auto* model_forward = model->add_subcommand("forward", "super-resolve the last frame");
  model_forward->add_option("--frames", mf.frames, "directory of LR frames")->required();
  model_forward->add_option("--weights", mf.weights, "weight bundle directory (default: seeded random)");
  model_forward->add_option("--config", mf.config, "model config JSON");
  model_forward->add_option("--flows", mf.flows, "directory of TSTF flow fields");
  model_forward->add_option("--out", mf.out, "output .ppm or .tstf");
  model_forward->add_option("--save-weights", mf.save_weights, "export the weights used");
  model_forward->add_flag("--zero-recon", mf.zero_recon, "zero every reconstruction weight");
  ModelCountArgs mc;
  auto* model_count = model->add_subcommand("count", "parameter and MAC counts");
  model_count->add_option("--config", mc.config, "model config JSON");
  model_count->add_option("--height", mc.height);
  model_count->add_option("--width", mc.width);
  model_count->add_flag("--calibrate", mc.calibrate, "sweep C for the closest match to 3.0M params");

  auto* loss = app.add_subcommand("loss", "losses")->require_subcommand(1);
  LossEvalArgs le;
  auto* loss_eval = loss->add_subcommand("eval", "evaluate spatial, trajectory and total loss");
  loss_eval->add_option("--sr", le.sr)->required();
  loss_eval->add_option("--hr", le.hr)->required();
  loss_eval->add_option("--lr-traj", le.lr_traj);
  loss_eval->add_option("--hr-traj", le.hr_traj);
  loss_eval->add_option("--epsilon", le.epsilon);
  loss_eval->add_option("--lambda", le.lambda);
  loss_eval->add_option("--scale", le.scale);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "tsm: " << e.what() << "\n";
    const std::string what = e.what();
    if (dynamic_cast<const CLI::ExtrasError*>(&e) || what.find("subcommand") != std::string::npos) {
      std::cerr << app.help();
    }
    return 2;
  }

  tsm::set_num_threads(threads);
  Report rep;
  int code = 0;
  try {
    for (auto* group : app.get_subcommands()) {
      for (auto* leaf : group->get_subcommands()) {
        rep.command = group->get_name() + " " + leaf->get_name();
      }
    }
    if (scan_gen->parsed()) run_scan_gen(sg, rep);
    else if (scan_check->parsed()) code = run_scan_check(sc, rep);
    else if (disc_analyze->parsed()) run_disc_analyze(da, rep);
    else if (disc_search->parsed()) run_disc_search(ds, rep);
    else if (traj_select->parsed()) run_traj_select(ts, rep);
    else if (ssm_run->parsed()) run_ssm_run(sr, seed, rep);
    else if (grad_check->parsed()) code = run_grad_check(gc, seed, rep);
    else if (model_forward->parsed()) run_model_forward(mf, seed, rep);
    else if (model_count->parsed()) run_model_count(mc, rep);
    else if (loss_eval->parsed()) run_loss_eval(le, rep);
  } catch (const UsageError& e) {
    std::cerr << "tsm: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "tsm: " << e.what() << "\n";
    return 2;
  } catch (const tsm::FormatError& e) {
    std::cerr << "tsm: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "tsm: internal error: " << e.what() << "\n";
    return 1;
  }
  std::cout << rep.dump() << "\n";
  return code;
}
