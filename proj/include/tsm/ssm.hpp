#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tsm/nn.hpp"
#include "tsm/random.hpp"
#include "tsm/scanorder.hpp"
#include "tsm/tensor.hpp"
#include "tsm/trajectory.hpp"

namespace tsm {

// Per step l with input u (width C):
//   delta = softplus(W_delta u + b_delta)        [C]
//   B = W_B u, Cout = W_C u                      [Nst]
//   h[c,n] = exp(delta[c] A[c,n]) h[c,n] + delta[c] B[n] u[c]
//   y[c] = sum_n Cout[n] h[c,n] + D[c] u[c]
struct SelectiveScanParams {
  int channels = 0;
  int state_dim = 0;
  Tensor a;        // [C, Nst]
  Tensor w_delta;  // [C, C]
  Tensor b_delta;  // [C]
  Tensor w_b;      // [Nst, C]
  Tensor w_c;      // [Nst, C]
  Tensor d;        // [C]

  void validate() const;
};

SelectiveScanParams zero_scan_params(int channels, int state_dim);
// A = -(1..Nst) per channel, projections uniform in [-scale, scale].
SelectiveScanParams random_scan_params(int channels, int state_dim, Rng& rng,
                                       double scale = 0.3);

// Flat double copies; the recurrence itself always runs in double.
struct ScanParams64 {
  int channels = 0;
  int state_dim = 0;
  std::vector<double> a, w_delta, b_delta, w_b, w_c, d;
};
ScanParams64 to_f64(const SelectiveScanParams& p);

struct ScanCache {
  std::size_t length = 0;
  std::vector<double> z;      // [L, C] pre-softplus
  std::vector<double> delta;  // [L, C]
  std::vector<double> b;      // [L, Nst]
  std::vector<double> c;      // [L, Nst]
  std::vector<double> h;      // [L, C, Nst]
};

struct ScanGrads {
  std::vector<double> u, a, w_delta, b_delta, w_b, w_c, d;
};

double softplus(double z);

// u is [L, C] row-major.
std::vector<double> scan_forward64(const ScanParams64& p,
                                   const std::vector<double>& u,
                                   std::size_t length,
                                   ScanCache* cache = nullptr);
ScanGrads scan_backward64(const ScanParams64& p, const std::vector<double>& u,
                          std::size_t length, const ScanCache& cache,
                          const std::vector<double>& dy);

Tensor selective_scan_forward(const SelectiveScanParams& p,
                              const Tensor& sequence,
                              ScanCache* cache = nullptr);
ScanGrads selective_scan_backward(const SelectiveScanParams& p,
                                  const Tensor& sequence,
                                  const ScanCache& cache,
                                  const Tensor& upstream);

// Token indices (row-major on an ht x wt grid) of every window, in visit
// order. Windows are window x window blocks of the grid shifted by `shift`,
// each scanned by the Hilbert curve of the given orientation, visited in
// raster order; positions map back through the inverse shift.
std::vector<std::vector<int>> window_sequences(int orientation, int ht, int wt,
                                              int window,
                                              const ShiftSpec& shift);

// Slot layout of a stacked token tensor [N, s + 1, C]: slots 0..s-1 are the
// selected tokens in ascending frame index (oldest first), slot s is the
// current token.
struct ScanSequence {
  int s = 0;
  std::vector<std::pair<int, int>> entries;  // (token, slot) per step
};

ScanSequence build_ss3d_sequence(const std::vector<int>& cells, int s);
Tensor stack_tokens(const Tensor& current, const Tensor& context, int s);
// context [N, s, C] in ascending frame order, built from a selection.
Tensor temporal_context(const SelectionResult& sel);
Tensor gather_sequence(const ScanSequence& seq, const Tensor& stacked);
void scatter_sequence(const ScanSequence& seq, const Tensor& values,
                      Tensor& stacked);

struct BlockScan {
  int orientation = 0;
  ShiftSpec shift;
  std::string label;
};

struct SsmBlockWeights {
  LayerNormParams ln;
  SelectiveScanParams scan;
};

// tokens [N, C]; context [N, s, C] (ignored when s == 0). Returns
// tokens + scan output read at the current-token slots.
Tensor ssm_block(const Tensor& tokens, const Tensor& context, int s, int ht,
                 int wt, int window, const BlockScan& scan,
                 const SsmBlockWeights& weights);

}  // namespace tsm
