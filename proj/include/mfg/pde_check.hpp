#pragma once

#include "mfg/equilibrium.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/measures.hpp"
#include "mfg/value_probe.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mfg {

/// phi(t,x) = psi(x) chi(t) with the compact C-infinity bump
///   psi(x) = exp(1 - 1 / (1 - |x-c|^2 / rho^2))  on |x - c| < rho,
/// and a smooth time cutoff chi equal to 1 up to t_end - ramp and 0 from
/// t_end on.
struct TestFunction {
  Vec center;
  double radius = 1.0;
  double t_end = 1.0;
  double ramp = 0.5;

  double value(double t, const Vec& x) const;
  double dt(double t, const Vec& x) const;
  Vec dx(double t, const Vec& x) const;
  bool active(double t, const Vec& x) const;
};

/// n bumps with centres in region, radii in [0.25, 0.5] diam(region) and
/// cutoffs t_end in [0.6 T, 0.95 T].
std::vector<TestFunction> random_test_functions(const Box& region, double horizon, int n,
                                                std::uint64_t seed);

/// Velocity of the transport field at (node, x).
using VelocityField = std::function<Vec(int node, const Vec& x)>;

struct ContinuityReport {
  double max_residual = 0.0;
  std::vector<double> per_test;
};

/// |int phi(0,.) dm0 + int_0^T sum_j w_j [d_t phi + <D_x phi, v>](t, x_j) dt|
/// with the time integral by the trapezoidal rule on the grid.
ContinuityReport continuity_residual(const FlowOfMeasures& flow, const VelocityField& field,
                                     const std::vector<TestFunction>& tests);

/// Same, with v = -D_pH(x, D_xV(t,x), m_t) and D_xV by central differences
/// of the value source.
ContinuityReport continuity_residual(const FlowOfMeasures& flow, ValueSource& value,
                                     const LinearDynamics& dyn, const LagrangianModel& model,
                                     const std::vector<TestFunction>& tests);

/// Finite-difference step max(1e-4, 0.01 dt).
double fd_step(const TimeGrid& grid);

struct GradientEstimate {
  Vec central;
  bool consistent = true;  ///< central and one-sided quotients agree
};

/// Central-difference gradients of V at each query, with the filter
/// |one-sided - central| <= 0.1 max(|forward|, |backward|) + 10 h per axis.
std::vector<GradientEstimate> fd_gradients(ValueSource& value,
                                           const std::vector<ValueQuery>& points, double h);

struct HjbReport {
  double max_residual = 0.0;
  double median = 0.0;
  double q90 = 0.0;
  std::vector<double> residuals;  ///< kept points only
  int kept = 0;
  int skipped = 0;
  double terminal_max = 0.0;  ///< max |V(T,x) - G(x, m_T)|

  /// Fraction of kept points with residual <= tol.
  double fraction_below(double tol) const;
};

/// |-d_t V + H(x, D_xV, m_t)| at interior sample points, with d_t V by central
/// differences across nodes and H including -F. Points failing the
/// differentiability filter are skipped and counted. Terminal points are
/// checked separately against G.
HjbReport hjb_residual(ValueSource& value, const LinearDynamics& dyn, const LagrangianModel& model,
                       const FlowOfMeasures& flow, const std::vector<ValueQuery>& samples);

/// A coupling functional Psi(x, m).
using CouplingFunctional = std::function<double(const Vec& x, const ParticleMeasure& m)>;

struct MonotonicityReport {
  double min_pairing = 0.0;
  std::vector<double> pairings;
  bool monotone = false;
  /// Every near-zero pairing comes with Psi(., m1) = Psi(., m2) on the
  /// witness points.
  bool strictly_monotone = false;
};

inline constexpr double kMonotoneTolerance = 1e-10;

/// int (Psi(x,m1) - Psi(x,m2)) d(m1 - m2)(x) for each pair.
MonotonicityReport monotonicity_check(
    const CouplingFunctional& psi,
    const std::vector<std::pair<ParticleMeasure, ParticleMeasure>>& pairs,
    const std::vector<Vec>& witness_points);

/// Random pairs of particle measures in the region.
std::vector<std::pair<ParticleMeasure, ParticleMeasure>> random_measure_pairs(
    const Box& region, int n_pairs, int particles, std::uint64_t seed);

struct UniquenessReport {
  bool skipped = false;
  std::string reason;
  double max_value_gap = 0.0;
  int runs = 0;
  int converged_runs = 0;
  std::vector<bool> converged;
  std::vector<double> final_exploitability;
};

/// Fictitious play from the reference ensemble, constant-control and random
/// starts (cycling for n_runs > 3), then max |V_a - V_b| over the probe points
/// across converged runs. Skipped when F or G fails the monotonicity check.
UniquenessReport uniqueness_check(const DiscreteFlow& flow, const LagrangianModel& model,
                                  const ParticleMeasure& m0, const EquilibriumConfig& cfg,
                                  int n_runs, const std::vector<ValueQuery>& probe_points,
                                  const Box& region, const ValueProbeOptions& probe_options = {});

struct SynthesisReport {
  double max_path_deviation = 0.0;  ///< max over starts of sup_t |gamma - stored| / (1 + |x|)
  std::vector<double> deviations;
  int skipped = 0;
};

/// Integrates gamma' = -D_pH(gamma, D_xV(t, gamma), m_t) with Heun's method
/// from each start of the ensemble and compares with the stored path of
/// largest weight for that start.
SynthesisReport synthesis_check(ValueSource& value, const LinearDynamics& dyn,
                                const LagrangianModel& model, const TrajectoryEnsemble& eta);

}  // namespace mfg
