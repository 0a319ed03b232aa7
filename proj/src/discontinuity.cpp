#include "tsm/discontinuity.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "tsm/parallel.hpp"

namespace tsm {

int degree_of_indices(std::array<int, 4> idx) {
  std::sort(idx.begin(), idx.end());
  int gaps = 0;
  for (int k = 0; k < 3; ++k) gaps += idx[k + 1] - idx[k] > 1;
  return gaps;
}

namespace {

int degree_with_map(const std::vector<int>& index_map, int size,
                    const Region& region) {
  std::array<int, 4> idx{};
  const auto cells = region.cells();
  for (int k = 0; k < 4; ++k) {
    idx[k] = index_map[static_cast<std::size_t>(cells[k].row) * size +
                       cells[k].col];
  }
  return degree_of_indices(idx);
}

void check_region(int size, const Region& region) {
  if (region.anchor.row < 0 || region.anchor.col < 0 ||
      region.anchor.row + 1 >= size || region.anchor.col + 1 >= size) {
    throw std::invalid_argument("region anchored at (" +
                                std::to_string(region.anchor.row) + ", " +
                                std::to_string(region.anchor.col) +
                                ") leaves the grid");
  }
}

const char* kind_name(RegionKind k) {
  return k == RegionKind::IntraWindow ? "intra" : "inter";
}

DiscontinuityReport analyze_orders(const ScanOrder& first,
                                   const ShiftSpec& shift,
                                   const ScanOrder& second, int window) {
  const Procedure p = compose_scan_shift_scan(first, shift, second);
  return elimination(p, WindowPartition(first.size, window));
}

}  // namespace

int region_degree(const ScanOrder& order, const Region& region) {
  check_region(order.size, region);
  if (!is_bijection(order)) {
    throw std::invalid_argument("region_degree needs a bijective order");
  }
  return degree_with_map(order.index_map(), order.size, region);
}

std::vector<Region> enumerate_regions(int grid_size,
                                      const WindowPartition& partition) {
  if (partition.grid_size != grid_size) {
    throw std::invalid_argument("partition grid does not match");
  }
  std::vector<Region> out;
  for (int r = 0; r + 1 < grid_size; ++r) {
    for (int c = 0; c + 1 < grid_size; ++c) {
      Region reg{{r, c}, RegionKind::IntraWindow};
      const auto cells = reg.cells();
      const int w = partition.window_id(cells[0]);
      for (const Cell& x : cells) {
        if (partition.window_id(x) != w) reg.kind = RegionKind::InterWindow;
      }
      out.push_back(reg);
    }
  }
  return out;
}

DiscontinuityReport elimination(const Procedure& procedure,
                                const WindowPartition& partition) {
  const int n = procedure.first.size;
  if (partition.grid_size != n || procedure.second.size != n) {
    throw std::invalid_argument("procedure grid " + std::to_string(n) +
                                " does not match partition grid " +
                                std::to_string(partition.grid_size));
  }
  if (!is_bijection(procedure.first) ||
      !is_bijection(procedure.shifted_second_order)) {
    throw std::invalid_argument("procedure scans must be bijections");
  }
  const auto map1 = procedure.first.index_map();
  const auto map2 = procedure.shifted_second_order.index_map();

  DiscontinuityReport rep;
  rep.procedure = procedure.label();
  rep.first = procedure.first.label;
  rep.shift = procedure.shift.label;
  rep.second = procedure.second.label;
  rep.grid_size = n;
  rep.window_size = partition.window_size;
  for (const Region& reg : enumerate_regions(n, partition)) {
    RegionRecord rec{reg.anchor, reg.kind, degree_with_map(map1, n, reg),
                     degree_with_map(map2, n, reg), 0};
    rec.eliminated = std::max(0, rec.d_first - rec.d_second);
    if (reg.kind == RegionKind::IntraWindow) {
      rep.delta_intra += rec.eliminated;
    } else {
      rep.delta_inter += rec.eliminated;
    }
    rep.regions.push_back(rec);
  }
  rep.delta = rep.delta_intra + rep.delta_inter;
  return rep;
}

DiscontinuityReport analyze(ScanVariant first, const ShiftSpec& shift,
                            ScanVariant second, int grid, int window) {
  return analyze_orders(window_scan(first, grid, window), shift,
                        window_scan(second, grid, window), window);
}

std::vector<ShiftSpec> default_shifts() {
  static const std::array<std::pair<int, int>, 8> dirs = {{{-1, 0},
                                                            {1, 0},
                                                            {0, -1},
                                                            {0, 1},
                                                            {-1, -1},
                                                            {-1, 1},
                                                            {1, -1},
                                                            {1, 1}}};
  std::vector<ShiftSpec> out;
  for (auto [dr, dc] : dirs) {
    for (int k = 1; k <= 3; ++k) out.push_back(make_shift(dr * k, dc * k));
  }
  return out;
}

std::vector<DiscontinuityReport> search_procedures(
    int grid, int window, const std::vector<ShiftSpec>& shifts) {
  if (shifts.empty()) throw std::invalid_argument("shift list is empty");
  std::array<ScanOrder, 4> scans;
  for (ScanVariant v : kAllVariants) {
    scans[static_cast<int>(v)] = window_scan(v, grid, window);
  }
  const std::size_t per_first = shifts.size() * 4;
  std::vector<DiscontinuityReport> rows(4 * per_first);
  parallel_for(0, rows.size(), [&](std::size_t i) {
    const std::size_t a = i / per_first;
    const std::size_t sh = (i % per_first) / 4;
    const std::size_t b = i % 4;
    rows[i] = analyze_orders(scans[a], shifts[sh], scans[b], window);
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const DiscontinuityReport& x,
                      const DiscontinuityReport& y) {
                     return std::tuple(-x.delta, -x.delta_inter, x.procedure) <
                            std::tuple(-y.delta, -y.delta_inter, y.procedure);
                   });
  return rows;
}

std::vector<RegionRecord> mirror_records(const std::vector<RegionRecord>& recs,
                                         int grid) {
  std::vector<RegionRecord> out = recs;
  for (auto& r : out) r.anchor.col = grid - 2 - r.anchor.col;
  std::sort(out.begin(), out.end(),
            [](const RegionRecord& a, const RegionRecord& b) {
              return a.anchor < b.anchor;
            });
  return out;
}

std::vector<PinCandidate> pin_orientations() {
  constexpr int kGrid = 8, kWindow = 4;
  std::array<ScanOrder, 8> scans;
  for (int k = 0; k < 8; ++k) scans[k] = window_scan(k, kGrid, kWindow);

  std::map<std::tuple<int, int, int, int>, DiscontinuityReport> memo;
  auto rep = [&](int a, int dr, int dc, int b) -> const DiscontinuityReport& {
    const auto key = std::tuple(a, b, dr, dc);
    auto it = memo.find(key);
    if (it == memo.end()) {
      it = memo.emplace(key, analyze_orders(scans[a], make_shift(dr, dc),
                                            scans[b], kWindow))
               .first;
    }
    return it->second;
  };

  std::vector<PinCandidate> out;
  for (int s1 = 0; s1 < 8; ++s1) {
    for (int s2 = 0; s2 < 8; ++s2) {
      for (int s3 = 0; s3 < 8; ++s3) {
        for (int s4 = 0; s4 < 8; ++s4) {
          if (s1 == s2 || s1 == s3 || s1 == s4 || s2 == s3 || s2 == s4 ||
              s3 == s4) {
            continue;
          }
          const auto& u = rep(s1, -1, 0, s3);
          int res = std::abs(u.delta - 18) + std::abs(u.delta_intra - 18) +
                    std::abs(u.delta_inter);
          res += std::abs(rep(s1, -3, -3, s3).delta_inter - 6);
          res += std::abs(rep(s1, -3, 3, s3).delta_inter - 6);
          res += std::abs(rep(s2, 0, -1, s4).delta - 18);
          res += std::abs(rep(s3, 1, 0, s1).delta - 18);
          res += std::abs(rep(s4, 0, 1, s2).delta - 18);
          for (int k = 1; k <= 3; ++k) {
            res += std::abs(rep(s1, -k, -k, s3).delta -
                            rep(s1, -k, k, s3).delta);
          }
          out.push_back({{s1, s2, s3, s4}, res});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const PinCandidate& a, const PinCandidate& b) {
              return std::tie(a.residual, a.orientations) <
                     std::tie(b.residual, b.orientations);
            });
  return out;
}

std::string report_to_json(const DiscontinuityReport& report) {
  nlohmann::ordered_json j;
  j["procedure"] = report.procedure;
  j["first"] = report.first;
  j["shift"] = report.shift;
  j["second"] = report.second;
  j["grid"] = report.grid_size;
  j["window"] = report.window_size;
  j["delta"] = report.delta;
  j["delta_intra"] = report.delta_intra;
  j["delta_inter"] = report.delta_inter;
  auto regions = nlohmann::ordered_json::array();
  for (const auto& r : report.regions) {
    nlohmann::ordered_json e;
    e["anchor"] = {r.anchor.row, r.anchor.col};
    e["kind"] = kind_name(r.kind);
    e["d_first"] = r.d_first;
    e["d_second"] = r.d_second;
    e["eliminated"] = r.eliminated;
    regions.push_back(std::move(e));
  }
  j["regions"] = std::move(regions);
  return j.dump();
}

std::string report_to_svg(const DiscontinuityReport& report, int cell_px) {
  static const char* kColors[4] = {"none", "#2a9d3a", "#d62828", "#888888"};
  const int n = report.grid_size;
  const int side = n * cell_px;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side
     << "\" height=\"" << side << "\" viewBox=\"0 0 " << side << ' ' << side
     << "\">\n";
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      os << "<rect x=\"" << c * cell_px << "\" y=\"" << r * cell_px
         << "\" width=\"" << cell_px << "\" height=\"" << cell_px
         << "\" fill=\"white\" stroke=\"#ccc\"/>\n";
    }
  }
  for (int w = report.window_size; w < n; w += report.window_size) {
    os << "<line x1=\"0\" y1=\"" << w * cell_px << "\" x2=\"" << side
       << "\" y2=\"" << w * cell_px << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    os << "<line x1=\"" << w * cell_px << "\" y1=\"0\" x2=\"" << w * cell_px
       << "\" y2=\"" << side << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  for (const auto& r : report.regions) {
    if (r.eliminated == 0) continue;
    const int cx = (r.anchor.col + 1) * cell_px;
    const int cy = (r.anchor.row + 1) * cell_px;
    os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\""
       << cell_px / 3 << "\" fill=\"none\" stroke=\""
       << kColors[std::min(r.eliminated, 3)] << "\" stroke-width=\"3\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string search_to_csv(const std::vector<DiscontinuityReport>& rows) {
  std::ostringstream os;
  os << "first,shift,second,delta_intra,delta_inter,delta\n";
  for (const auto& r : rows) {
    os << r.first << ',' << r.shift << ',' << r.second << ',' << r.delta_intra
       << ',' << r.delta_inter << ',' << r.delta << '\n';
  }
  return os.str();
}

}  // namespace tsm
