#pragma once

#include "mfg/types.hpp"

#include <span>
#include <vector>

namespace mfg {

class ParticleMeasure;
class TrajectoryEnsemble;

/// Controlled linear system  x' = A x + B u  on [0, T].
class LinearDynamics {
 public:
  LinearDynamics(Mat A, Mat B, double horizon);

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }
  double horizon() const { return horizon_; }
  int state_dim() const { return static_cast<int>(A_.rows()); }
  int control_dim() const { return static_cast<int>(B_.cols()); }

  Vec velocity(const Vec& x, const Vec& u) const { return A_ * x + B_ * u; }

 private:
  Mat A_;
  Mat B_;
  double horizon_;
};

/// Uniform grid t_i = i T / N, i = 0..N.
class TimeGrid {
 public:
  TimeGrid(double horizon, int intervals);

  int intervals() const { return intervals_; }
  int nodes() const { return intervals_ + 1; }
  double horizon() const { return horizon_; }
  double dt() const { return horizon_ / intervals_; }
  double time(int i) const { return horizon_ * i / intervals_; }

  /// Index of the node nearest to t (clamped to the grid).
  int nearest_node(double t) const;

  bool operator==(const TimeGrid& other) const = default;

 private:
  double horizon_;
  int intervals_;
};

/// State trajectory with piecewise-constant controls, starting at grid node
/// start_node. states has one column per node start_node..N, controls one
/// column per interval.
struct Path {
  int start_node = 0;
  Mat states;
  Mat controls;

  int steps() const { return static_cast<int>(controls.cols()); }
  Vec initial_state() const { return states.col(0); }
  Vec final_state() const { return states.col(states.cols() - 1); }
};

/// e^{tM} by scaling and squaring with a degree-13 Pade approximant.
Mat matrix_exponential(const Mat& M, double t = 1.0);

/// Exact one-interval propagators for piecewise-constant controls:
///   x_{i+1} = Phi x_i + Gamma u_i,  Phi = e^{dt A},  Gamma = int_0^dt e^{sA} ds B.
/// Gamma comes from exponentiating the block matrix [[A, B], [0, 0]].
class DiscreteFlow {
 public:
  DiscreteFlow(LinearDynamics dynamics, TimeGrid grid);

  const LinearDynamics& dynamics() const { return dynamics_; }
  const TimeGrid& grid() const { return grid_; }
  const Mat& Phi() const { return phi_; }
  const Mat& Gamma() const { return gamma_; }

  Vec step(const Vec& x, const Vec& u) const { return phi_ * x + gamma_ * u; }

 private:
  LinearDynamics dynamics_;
  TimeGrid grid_;
  Mat phi_;
  Mat gamma_;
};

/// Integrates from node t0_index with one control column per remaining
/// interval.
Path integrate_path(const DiscreteFlow& flow, int t0_index, const Vec& x,
                    const Mat& controls);

/// Zero-control ensemble t -> e^{tA} x_j, one path per particle of m0.
TrajectoryEnsemble reference_ensemble(const DiscreteFlow& flow,
                                      const ParticleMeasure& m0);

/// Moment bound for the reference ensemble,
///   (max(1, sqrt T) |A| e^{T|A|})^alpha [m0]_alpha.
double reference_moment_bound(const LinearDynamics& dynamics,
                              const ParticleMeasure& m0, double alpha);

/// Velocities A x_i + B u at both ends of every interval of the path.
/// Column 2i is the left value on interval i, column 2i+1 the right value.
Mat interval_velocities(const LinearDynamics& dynamics, const Path& path);

/// L2-in-time norm of the path velocity, trapezoidal per interval.
double velocity_l2_norm(const LinearDynamics& dynamics, const Path& path,
                        double dt);

/// Sup over nodes of the path velocity (both one-sided values).
double velocity_sup_norm(const LinearDynamics& dynamics, const Path& path);

/// L2-in-time norm of a piecewise-constant control sequence.
double control_l2_norm(const Mat& controls, double dt);

}  // namespace mfg
