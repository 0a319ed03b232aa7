#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace tsm {

enum class ScanVariant { Scan1 = 0, Scan2 = 1, Scan3 = 2, Scan4 = 3 };

inline constexpr std::array<ScanVariant, 4> kAllVariants = {
    ScanVariant::Scan1, ScanVariant::Scan2, ScanVariant::Scan3,
    ScanVariant::Scan4};

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// "scan1".."scan4" (case-insensitive, "Scan-1" also accepted).
ScanVariant parse_variant(std::string_view name);
std::string variant_name(ScanVariant v);

// Dihedral orientation k in [0, 8) of the base curve: swap axes if k&4,
// then flip rows if k&1, then flip columns if k&2.
int variant_orientation(ScanVariant v);

struct ScanOrder {
  int size = 0;
  std::vector<Cell> order;
  std::string label;

  // Inverse permutation: visit index of each cell, laid out row-major.
  std::vector<int> index_map() const;
};

bool is_power_of_two(int n);

// Hilbert curve of the given dihedral orientation on a size x size grid.
ScanOrder hilbert_curve(int orientation, int size);
ScanOrder generate_scan(ScanVariant variant, int size);

// Every aligned window is scanned by the window-sized curve; windows are
// visited in raster order. window == grid reproduces generate_scan.
ScanOrder window_scan(int orientation, int grid, int window);
ScanOrder window_scan(ScanVariant variant, int grid, int window);

struct ShiftSpec {
  int delta_row = 0;
  int delta_col = 0;
  std::string label;

  ShiftSpec negated() const;
  friend bool operator==(const ShiftSpec& a, const ShiftSpec& b) {
    return a.delta_row == b.delta_row && a.delta_col == b.delta_col;
  }
};

// Direction letters U/D/L/R (at most one vertical and one horizontal, any
// order, so LU == UL) followed by a step count: "U1", "UL3", "U(1)".
ShiftSpec parse_shift(std::string_view text);
ShiftSpec make_shift(int delta_row, int delta_col);

Cell shift_cell(const ShiftSpec& shift, Cell cell, int size);
// rho(cell) for every cell, row-major.
std::vector<Cell> apply_shift(const ShiftSpec& shift, int size);

struct WindowPartition {
  int grid_size = 0;
  int window_size = 0;

  WindowPartition(int grid, int window);
  int window_id(Cell cell) const;
  int windows_per_side() const { return grid_size / window_size; }
};

struct Procedure {
  ScanOrder first;
  ShiftSpec shift;
  ScanOrder second;
  ScanOrder shifted_second_order;

  std::string label() const;
};

// shifted_second_order[i] = rho^{-1}(second.order[i]): `second` is laid on
// the shifted grid and read back in original coordinates.
Procedure compose_scan_shift_scan(const ScanOrder& first,
                                  const ShiftSpec& shift,
                                  const ScanOrder& second);

bool is_bijection(const ScanOrder& order);
bool is_continuous(const ScanOrder& order);
ScanOrder mirror_lr(const ScanOrder& order);

std::string scan_to_json(const ScanOrder& order);
ScanOrder scan_from_json(const std::string& text);
std::string scan_to_svg(const ScanOrder& order, int cell_px = 24);

}  // namespace tsm
