#include "tsm/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tsm {

namespace {

void check_pair(const std::vector<double>& sr, const std::vector<double>& hr,
                double epsilon) {
  if (sr.size() != hr.size() || sr.empty()) {
    throw std::invalid_argument("charbonnier: inputs differ in size or are empty");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("charbonnier: epsilon must be > 0");
}

}  // namespace

double charbonnier64(const std::vector<double>& sr, const std::vector<double>& hr,
                     double epsilon) {
  check_pair(sr, hr, epsilon);
  double acc = 0.0;
  for (std::size_t i = 0; i < sr.size(); ++i) {
    const double d2 = (sr[i] - hr[i]) * (sr[i] - hr[i]);
    acc += d2 / (std::sqrt(d2 + epsilon * epsilon) + epsilon);
  }
  return epsilon + acc / static_cast<double>(sr.size());
}

std::vector<double> charbonnier_grad64(const std::vector<double>& sr,
                                       const std::vector<double>& hr,
                                       double epsilon) {
  check_pair(sr, hr, epsilon);
  std::vector<double> g(sr.size());
  const double m = static_cast<double>(sr.size());
  for (std::size_t i = 0; i < sr.size(); ++i) {
    const double d = sr[i] - hr[i];
    g[i] = d / (std::sqrt(d * d + epsilon * epsilon) * m);
  }
  return g;
}

double charbonnier_loss(const Tensor& sr, const Tensor& hr, double epsilon) {
  require_same_dims(sr, hr, "charbonnier_loss");
  return charbonnier64({sr.values().begin(), sr.values().end()},
                       {hr.values().begin(), hr.values().end()}, epsilon);
}

double trajectory_loss(const TrajectorySet& lr, const TrajectorySet& hr,
                       int scale) {
  if (scale < 1) throw std::invalid_argument("trajectory_loss: scale must be >= 1");
  const int sub_h = (hr.ht + scale - 1) / scale;
  const int sub_w = (hr.wt + scale - 1) / scale;
  if (sub_h != lr.ht || sub_w != lr.wt || hr.slots != lr.slots) {
    throw std::invalid_argument(
        "trajectory_loss: subsampled HR grid " + std::to_string(sub_h) + "x" +
        std::to_string(sub_w) + "x" + std::to_string(hr.slots) +
        " does not match LR grid " + std::to_string(lr.ht) + "x" +
        std::to_string(lr.wt) + "x" + std::to_string(lr.slots));
  }
  double acc = 0.0;
  for (int i = 0; i < lr.ht; ++i) {
    for (int j = 0; j < lr.wt; ++j) {
      const std::size_t nl = static_cast<std::size_t>(i) * lr.wt + j;
      const std::size_t nh = static_cast<std::size_t>(i * scale) * hr.wt + j * scale;
      for (int k = 0; k < lr.slots; ++k) {
        acc += std::fabs(lr.x(nl, k) - hr.x(nh, k) / scale) +
               std::fabs(lr.y(nl, k) - hr.y(nh, k) / scale);
      }
    }
  }
  return acc / (static_cast<double>(lr.count()) * lr.slots);
}

double total_loss(double spa, double trj, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  return spa + lambda * trj;
}

}  // namespace tsm
