#pragma once

#include "mfg/bounds.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/measures.hpp"
#include "mfg/ocp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mfg {

enum class Averaging { Harmonic, Constant };

struct EquilibriumConfig {
  int max_rounds = 50;
  Averaging averaging = Averaging::Harmonic;
  double lambda = 0.5;  ///< used with Averaging::Constant
  double tol_gap = 1e-6;
  double tol_exploitability = 1e-4;
  double alpha = 2.0;
  std::optional<double> R;  ///< defaults to R_star
  bool lipschitz = false;
  std::optional<double> c3;
  std::optional<double> c4;
  int h1_samples = 500;
  OcpOptions ocp;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class InitKind { Reference, ConstantControl, RandomControl };

/// Starting ensembles: the zero-control reference ensemble, one path per
/// particle driven by a constant control, or by i.i.d. normal controls.
TrajectoryEnsemble initial_ensemble(const DiscreteFlow& flow, const ParticleMeasure& m0,
                                    InitKind kind, std::uint64_t seed = 0,
                                    double amplitude = 0.5);

struct BestResponse {
  TrajectoryEnsemble ensemble;  ///< one best-response path per input path
  double exploitability = 0.0;
  std::vector<OcpSolution> solutions;  ///< one per distinct start
  std::vector<Vec> starts;
};

/// Best responses against the frozen flow e_t # eta. Each distinct start is
/// solved once from zero controls, the warm start (if any) and the cheapest
/// existing path of that start, so the exploitability
///   sum_j w_j [J_eta(x_j, u_j) - inf_u J_eta(x_j, u)]
/// comes out nonnegative up to rounding.
BestResponse best_response_detail(const DiscreteFlow& flow, const LagrangianModel& model,
                                  const TrajectoryEnsemble& eta, const OcpOptions& options = {},
                                  const std::vector<std::pair<Vec, Mat>>* warm = nullptr);

TrajectoryEnsemble best_response_ensemble(const DiscreteFlow& flow,
                                          const LagrangianModel& model,
                                          const TrajectoryEnsemble& eta,
                                          const OcpOptions& options = {});

double exploitability(const DiscreteFlow& flow, const LagrangianModel& model,
                      const TrajectoryEnsemble& eta, const OcpOptions& options = {});

/// (1 - lambda) a + lambda b as a weighted union of paths, followed by
/// pruning: weights below 1e-12 are dropped, paths closer than 1e-10 in
/// state sup-norm are merged, and weights are renormalized.
TrajectoryEnsemble mix_ensembles(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b,
                                 double lambda);

/// Lipschitz constant of t -> m_t on the grid: max over adjacent nodes of
/// d1(m_i, m_{i+1}) / dt, which equals the sup over all node pairs.
double flow_lipschitz_constant(const FlowOfMeasures& flow);

struct LipschitzCertificate {
  H1Report h1;
  bool h1_pass = false;
  std::optional<double> Q1;
  double flow_lipschitz = 0.0;       ///< final flow
  double max_flow_lipschitz = 0.0;   ///< over all rounds
  double max_velocity_ratio = 0.0;   ///< max |gamma'|_inf / (1 + |x|) over rounds
  bool velocity_ok = false;
  bool certified = false;
};

struct RoundRecord {
  int round = 0;
  double lambda = 0.0;
  double exploitability = 0.0;  ///< of the iterate entering this round
  double gap = 0.0;             ///< sup_t d1 between this iterate and the next
  int paths = 0;
  AdmissibilityReport admissibility;
};

struct EquilibriumReport {
  explicit EquilibriumReport(TrajectoryEnsemble eta) : ensemble(std::move(eta)) {}

  TrajectoryEnsemble ensemble;
  std::vector<RoundRecord> rounds;
  bool converged = false;
  std::string stop_reason;
  double final_exploitability = 0.0;
  AdmissibilityReport final_admissibility;
  double R = 0.0;
  std::optional<AprioriBounds> bounds;  ///< absent when the model has no growth data
  /// Worst ratios observed / bound over every best-response solve.
  double worst_control_ratio = 0.0;
  double worst_state_ratio = 0.0;
  double worst_velocity_ratio = 0.0;
  bool exploitability_monotone = true;
  std::optional<LipschitzCertificate> lipschitz;

  std::vector<double> gaps() const;
  std::vector<double> exploitability_trace() const;
};

/// eta^{k+1} = (1 - lambda_k) eta^k + lambda_k BR(eta^k), lambda_k = 1/(k+1)
/// or constant, from init (reference ensemble when absent). Stops once the
/// exploitability of the iterate is <= tol_exploitability or the sup_t d1
/// gap between successive iterates is <= tol_gap.
EquilibriumReport fictitious_play(const DiscreteFlow& flow, const LagrangianModel& model,
                                  const ParticleMeasure& m0, const EquilibriumConfig& cfg,
                                  const TrajectoryEnsemble* init = nullptr);

/// fictitious_play from the reference ensemble with per-round Lipschitz
/// certificates. Certification is refused when (H1) fails for the declared
/// constants.
EquilibriumReport lipschitz_equilibrium(const DiscreteFlow& flow, const LagrangianModel& model,
                                        const ParticleMeasure& m0, EquilibriumConfig cfg);

}  // namespace mfg
