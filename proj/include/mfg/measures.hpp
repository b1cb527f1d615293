#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mfg {

/// Weighted point cloud on R^d. Weights are nonnegative and sum to one.
class ParticleMeasure {
 public:
  /// points is d x n (one particle per column).
  ParticleMeasure(Mat points, Vec weights);

  /// Builds a measure from unnormalized nonnegative weights.
  static ParticleMeasure normalized(Mat points, Vec raw_weights);
  static ParticleMeasure dirac(const Vec& x);

  int dim() const { return static_cast<int>(points_.rows()); }
  int size() const { return static_cast<int>(points_.cols()); }
  const Mat& points() const { return points_; }
  const Vec& weights() const { return weights_; }
  Vec point(int j) const { return points_.col(j); }
  double weight(int j) const { return weights_(j); }

  Vec mean() const { return points_ * weights_; }

  /// Merges particles whose coordinates are bit-identical.
  ParticleMeasure compacted() const;

 private:
  Mat points_;
  Vec weights_;
};

/// Weighted collection of discretized paths sharing one time grid; a
/// particle representation of a measure on trajectory space.
class TrajectoryEnsemble {
 public:
  TrajectoryEnsemble(std::vector<Path> paths, Vec weights, TimeGrid grid);

  int size() const { return static_cast<int>(paths_.size()); }
  const std::vector<Path>& paths() const { return paths_; }
  const Path& path(int j) const { return paths_[j]; }
  const Vec& weights() const { return weights_; }
  double weight(int j) const { return weights_(j); }
  const TimeGrid& grid() const { return grid_; }

 private:
  std::vector<Path> paths_;
  Vec weights_;
  TimeGrid grid_;
};

/// Time marginals t_i -> m_{t_i}, one snapshot per grid node.
class FlowOfMeasures {
 public:
  FlowOfMeasures(std::vector<ParticleMeasure> snapshots, TimeGrid grid);

  /// Constant flow m_t = m for every node.
  static FlowOfMeasures constant(const ParticleMeasure& m, const TimeGrid& grid);

  const ParticleMeasure& at(int node) const { return snapshots_.at(node); }
  const std::vector<ParticleMeasure>& snapshots() const { return snapshots_; }
  const TimeGrid& grid() const { return grid_; }

 private:
  std::vector<ParticleMeasure> snapshots_;
  TimeGrid grid_;
};

/// e_{t_i} # eta.
ParticleMeasure pushforward_eval(const TrajectoryEnsemble& eta, int node);

/// All time marginals of eta.
FlowOfMeasures flow_of(const TrajectoryEnsemble& eta);

/// sum_j w_j |x_j|^alpha, alpha > 1.
double moment_alpha(const ParticleMeasure& mu, double alpha);

/// Largest particle count the exact transport backend accepts per side.
inline constexpr int kMaxTransportParticles = 512;

/// Exact Wasserstein-1 distance with Euclidean ground cost.
double wasserstein1(const ParticleMeasure& mu, const ParticleMeasure& nu);

/// One-dimensional W1 as the integral of |F_mu - F_nu|.
double wasserstein1_sorted(const ParticleMeasure& mu, const ParticleMeasure& nu);

/// Exact W1 via min-cost flow on the bipartite transport graph.
double wasserstein1_network(const ParticleMeasure& mu, const ParticleMeasure& nu);

/// sup over nodes of d1 between corresponding snapshots.
double flow_distance(const FlowOfMeasures& a, const FlowOfMeasures& b);

struct AdmissibilityReport {
  double initial_match = 0.0;  ///< d1(e_0 # eta, m0)
  double moment = 0.0;         ///< sum_j w_j |gamma_j'|_2^alpha
  double max_marginal_moment = 0.0;  ///< sup_t [e_t # eta]_alpha
  bool admissible = false;
};

inline constexpr double kInitialMatchTolerance = 1e-9;

AdmissibilityReport check_admissible(const TrajectoryEnsemble& eta,
                                     const ParticleMeasure& m0,
                                     const LinearDynamics& dynamics, double R,
                                     double alpha);

/// Conditional path measures indexed by the (bit-exact) initial point.
struct DisintegrationGroup {
  Vec start;
  double mass = 0.0;
  std::vector<int> path_indices;
  Vec conditional_weights;  ///< sums to one
};

std::vector<DisintegrationGroup> disintegrate(const TrajectoryEnsemble& eta);

/// Inverse of disintegrate: weight of path j is mass * conditional weight.
Vec reassemble_weights(const std::vector<DisintegrationGroup>& groups,
                       int path_count);

// CSV: header `w,x1,...,xd`, one particle per row.
void write_measure_csv(std::ostream& out, const ParticleMeasure& mu);
ParticleMeasure read_measure_csv(std::istream& in);

/// Long-format flow CSV with header `t,node,w,x1,...,xd`.
void write_flow_csv(std::ostream& out, const FlowOfMeasures& flow);

}  // namespace mfg
