#pragma once

#include <array>
#include <string>
#include <vector>

#include "tsm/scanorder.hpp"

namespace tsm {

enum class RegionKind { IntraWindow, InterWindow };

struct Region {
  Cell anchor;
  RegionKind kind = RegionKind::IntraWindow;

  std::array<Cell, 4> cells() const {
    return {Cell{anchor.row, anchor.col}, Cell{anchor.row, anchor.col + 1},
            Cell{anchor.row + 1, anchor.col},
            Cell{anchor.row + 1, anchor.col + 1}};
  }
};

// Number of gaps between the sorted visit indices of the four cells.
int degree_of_indices(std::array<int, 4> idx);
int region_degree(const ScanOrder& order, const Region& region);

std::vector<Region> enumerate_regions(int grid_size,
                                      const WindowPartition& partition);

struct RegionRecord {
  Cell anchor;
  RegionKind kind;
  int d_first;
  int d_second;
  int eliminated;
};

struct DiscontinuityReport {
  std::string procedure;
  std::string first;
  std::string shift;
  std::string second;
  int grid_size = 0;
  int window_size = 0;
  std::vector<RegionRecord> regions;
  int delta_intra = 0;
  int delta_inter = 0;
  int delta = 0;
};

DiscontinuityReport elimination(const Procedure& procedure,
                                const WindowPartition& partition);

// Windowed Scan-Shift-Scan report for two variants.
DiscontinuityReport analyze(ScanVariant first, const ShiftSpec& shift,
                            ScanVariant second, int grid, int window);

// {U, D, L, R, UL, UR, DL, DR} x {1, 2, 3}.
std::vector<ShiftSpec> default_shifts();

// All (first, shift, second) triples over the four variants, sorted by
// delta desc, delta_inter desc, then label.
std::vector<DiscontinuityReport> search_procedures(
    int grid, int window, const std::vector<ShiftSpec>& shifts);

// Region-wise mirror image (anchor col -> grid - 2 - col), re-sorted into
// row-major anchor order.
std::vector<RegionRecord> mirror_records(const std::vector<RegionRecord>& recs,
                                         int grid);

struct PinCandidate {
  std::array<int, 4> orientations;  // Scan1..Scan4
  int residual;
};

// Scores every assignment of distinct orientations to Scan1..Scan4 against
// the target elimination values on the 8x8 / 4x4 setup. Sorted by
// residual then orientation tuple.
std::vector<PinCandidate> pin_orientations();

std::string report_to_json(const DiscontinuityReport& report);
std::string report_to_svg(const DiscontinuityReport& report, int cell_px = 40);
std::string search_to_csv(const std::vector<DiscontinuityReport>& rows);

}  // namespace tsm
