#pragma once

#include <vector>

#include "tsm/tensor.hpp"
#include "tsm/trajectory.hpp"

namespace tsm {

struct LossConfig {
  double epsilon = 1e-4;
  double lambda = 0.1;
  int scale = 4;
};

// mean_i sqrt(d_i^2 + eps^2), evaluated as eps + mean_i d^2 / (sqrt(d^2 +
// eps^2) + eps) so identical inputs give eps exactly.
double charbonnier64(const std::vector<double>& sr, const std::vector<double>& hr,
                     double epsilon);
std::vector<double> charbonnier_grad64(const std::vector<double>& sr,
                                       const std::vector<double>& hr,
                                       double epsilon);
double charbonnier_loss(const Tensor& sr, const Tensor& hr, double epsilon = 1e-4);

// HR trajectories keep every scale-th token per grid axis, coordinates are
// divided by scale, then the mean over (token, frame) of |dx| + |dy|.
double trajectory_loss(const TrajectorySet& lr, const TrajectorySet& hr,
                       int scale);

double total_loss(double spa, double trj, double lambda = 0.1);

}  // namespace tsm
