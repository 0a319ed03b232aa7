#include "tsm/scanorder.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tsm {

namespace {

// Orientations chosen by the pinning search in discontinuity.cpp
// (pin_orientations); see README.
constexpr std::array<int, 4> kVariantOrientation = {4, 2, 5, 6};

Cell d2xy(int n, int d) {
  int x = 0, y = 0;
  for (int s = 1, t = d; s < n; s *= 2, t /= 4) {
    const int rx = 1 & (t / 2);
    const int ry = 1 & (t ^ rx);
    if (ry == 0) {
      if (rx == 1) {
        x = s - 1 - x;
        y = s - 1 - y;
      }
      std::swap(x, y);
    }
    x += s * rx;
    y += s * ry;
  }
  return {x, y};
}

Cell orient(int k, int n, Cell p) {
  if (k & 4) std::swap(p.row, p.col);
  if (k & 1) p.row = n - 1 - p.row;
  if (k & 2) p.col = n - 1 - p.col;
  return p;
}

int wrap(int v, int n) {
  const int m = v % n;
  return m < 0 ? m + n : m;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

ScanVariant parse_variant(std::string_view name) {
  std::string s = lower(name);
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  for (ScanVariant v : kAllVariants) {
    if (s == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown scan variant: " + std::string(name));
}

std::string variant_name(ScanVariant v) {
  return "scan" + std::to_string(static_cast<int>(v) + 1);
}

int variant_orientation(ScanVariant v) {
  return kVariantOrientation[static_cast<int>(v)];
}

std::vector<int> ScanOrder::index_map() const {
  std::vector<int> idx(static_cast<std::size_t>(size) * size, -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    idx[static_cast<std::size_t>(order[i].row) * size + order[i].col] =
        static_cast<int>(i);
  }
  return idx;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

ScanOrder hilbert_curve(int orientation, int size) {
  if (!is_power_of_two(size)) {
    throw std::invalid_argument("scan size must be a positive power of two, got " +
                                std::to_string(size));
  }
  if (orientation < 0 || orientation >= 8) {
    throw std::invalid_argument("orientation must be in [0, 8)");
  }
  ScanOrder out;
  out.size = size;
  out.label = "k" + std::to_string(orientation);
  out.order.reserve(static_cast<std::size_t>(size) * size);
  for (int d = 0; d < size * size; ++d) {
    out.order.push_back(orient(orientation, size, d2xy(size, d)));
  }
  return out;
}

ScanOrder generate_scan(ScanVariant variant, int size) {
  ScanOrder out = hilbert_curve(variant_orientation(variant), size);
  out.label = variant_name(variant);
  return out;
}

ScanOrder window_scan(int orientation, int grid, int window) {
  if (!is_power_of_two(window) || grid <= 0 || grid % window != 0) {
    throw std::invalid_argument("window " + std::to_string(window) +
                                " must be a power of two dividing grid " +
                                std::to_string(grid));
  }
  const ScanOrder local = hilbert_curve(orientation, window);
  ScanOrder out;
  out.size = grid;
  out.label = local.label;
  out.order.reserve(static_cast<std::size_t>(grid) * grid);
  for (int wr = 0; wr < grid; wr += window) {
    for (int wc = 0; wc < grid; wc += window) {
      for (Cell c : local.order) out.order.push_back({wr + c.row, wc + c.col});
    }
  }
  return out;
}

ScanOrder window_scan(ScanVariant variant, int grid, int window) {
  ScanOrder out = window_scan(variant_orientation(variant), grid, window);
  out.label = variant_name(variant);
  return out;
}

ShiftSpec ShiftSpec::negated() const {
  return make_shift(-delta_row, -delta_col);
}

ShiftSpec make_shift(int delta_row, int delta_col) {
  ShiftSpec s{delta_row, delta_col, ""};
  const int ar = std::abs(delta_row), ac = std::abs(delta_col);
  std::string dir;
  if (delta_row < 0) dir += 'U';
  if (delta_row > 0) dir += 'D';
  if (delta_col < 0) dir += 'L';
  if (delta_col > 0) dir += 'R';
  if (dir.empty()) {
    s.label = "0";
  } else if (ar == 0 || ac == 0 || ar == ac) {
    s.label = dir + "(" + std::to_string(std::max(ar, ac)) + ")";
  } else {
    s.label = "(" + std::to_string(delta_row) + "," +
              std::to_string(delta_col) + ")";
  }
  return s;
}

ShiftSpec parse_shift(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (ch != '(' && ch != ')' && ch != ' ') s += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  if (s == "0" || s == "NONE") return make_shift(0, 0);
  std::size_t i = 0;
  int vr = 0, vc = 0;
  while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
    int* slot = nullptr;
    int sign = 0;
    switch (s[i]) {
      case 'U': slot = &vr; sign = -1; break;
      case 'D': slot = &vr; sign = 1; break;
      case 'L': slot = &vc; sign = -1; break;
      case 'R': slot = &vc; sign = 1; break;
      default:
        throw std::invalid_argument("bad shift direction in '" +
                                    std::string(text) + "'");
    }
    if (*slot != 0) {
      throw std::invalid_argument("conflicting shift directions in '" +
                                  std::string(text) + "'");
    }
    *slot = sign;
    ++i;
  }
  if (i == 0 || i == s.size()) {
    throw std::invalid_argument("shift must look like U1 or UL3, got '" +
                                std::string(text) + "'");
  }
  int k = 0;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])) || k > 100000) {
      throw std::invalid_argument("bad shift step in '" + std::string(text) +
                                  "'");
    }
    k = k * 10 + (s[i] - '0');
  }
  return make_shift(vr * k, vc * k);
}

Cell shift_cell(const ShiftSpec& shift, Cell cell, int size) {
  return {wrap(cell.row + shift.delta_row, size),
          wrap(cell.col + shift.delta_col, size)};
}

std::vector<Cell> apply_shift(const ShiftSpec& shift, int size) {
  if (size < 1) throw std::invalid_argument("size must be positive");
  std::vector<Cell> out;
  out.reserve(static_cast<std::size_t>(size) * size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) out.push_back(shift_cell(shift, {r, c}, size));
  }
  return out;
}

WindowPartition::WindowPartition(int grid, int window)
    : grid_size(grid), window_size(window) {
  if (grid < 1 || window < 1 || grid % window != 0) {
    throw std::invalid_argument("window size " + std::to_string(window) +
                                " does not divide grid " +
                                std::to_string(grid));
  }
}

int WindowPartition::window_id(Cell cell) const {
  return (cell.row / window_size) * windows_per_side() +
         cell.col / window_size;
}

std::string Procedure::label() const {
  return first.label + "->" + shift.label + "->" + second.label;
}

Procedure compose_scan_shift_scan(const ScanOrder& first,
                                  const ShiftSpec& shift,
                                  const ScanOrder& second) {
  if (first.size != second.size) {
    throw std::invalid_argument("scan sizes differ: " +
                                std::to_string(first.size) + " vs " +
                                std::to_string(second.size));
  }
  Procedure p{first, shift, second, {}};
  const ShiftSpec back = shift.negated();
  p.shifted_second_order.size = second.size;
  p.shifted_second_order.label = second.label + "@" + shift.label;
  p.shifted_second_order.order.reserve(second.order.size());
  for (Cell c : second.order) {
    p.shifted_second_order.order.push_back(shift_cell(back, c, second.size));
  }
  return p;
}

bool is_bijection(const ScanOrder& order) {
  const std::size_t n = static_cast<std::size_t>(order.size) * order.size;
  if (order.order.size() != n) return false;
  std::vector<char> seen(n, 0);
  for (Cell c : order.order) {
    if (c.row < 0 || c.col < 0 || c.row >= order.size || c.col >= order.size)
      return false;
    char& s = seen[static_cast<std::size_t>(c.row) * order.size + c.col];
    if (s) return false;
    s = 1;
  }
  return true;
}

bool is_continuous(const ScanOrder& order) {
  for (std::size_t i = 1; i < order.order.size(); ++i) {
    const Cell a = order.order[i - 1], b = order.order[i];
    if (std::abs(a.row - b.row) + std::abs(a.col - b.col) != 1) return false;
  }
  return true;
}

ScanOrder mirror_lr(const ScanOrder& order) {
  ScanOrder out = order;
  out.label = "mirror(" + order.label + ")";
  for (Cell& c : out.order) c.col = order.size - 1 - c.col;
  return out;
}

std::string scan_to_json(const ScanOrder& order) {
  nlohmann::ordered_json j;
  j["variant"] = order.label;
  j["size"] = order.size;
  nlohmann::json cells = nlohmann::json::array();
  for (Cell c : order.order) cells.push_back({c.row, c.col});
  j["order"] = std::move(cells);
  return j.dump();
}

ScanOrder scan_from_json(const std::string& text) {
  ScanOrder out;
  try {
    const auto j = nlohmann::json::parse(text);
    out.label = j.at("variant").get<std::string>();
    out.size = j.at("size").get<int>();
    for (const auto& e : j.at("order")) {
      if (!e.is_array() || e.size() != 2) {
        throw std::invalid_argument("order entries must be [row, col]");
      }
      out.order.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad scan json: ") + e.what());
  }
  return out;
}

std::string scan_to_svg(const ScanOrder& order, int cell_px) {
  const int side = order.size * cell_px;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side
     << "\" height=\"" << side << "\" viewBox=\"0 0 " << side << ' ' << side
     << "\">\n";
  os << "<rect width=\"" << side << "\" height=\"" << side
     << "\" fill=\"white\" stroke=\"#bbb\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < order.order.size(); ++i) {
    const Cell c = order.order[i];
    if (i) os << ' ';
    os << c.col * cell_px + cell_px / 2 << ',' << c.row * cell_px + cell_px / 2;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace tsm
