#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/measures.hpp"
#include "mfg/ocp.hpp"

#include <optional>
#include <string>

namespace mfg {

/// A-priori constants of the control problem and of the equilibrium flow.
struct AprioriBounds {
  double alpha = 2.0;
  double radius = 0.0;  ///< ball |x| <= radius on which the data are bounded
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;        ///< |D_pH| <= c2 (1 + |x| + |p|)
  double c2_space = 0.0;  ///< |D_xL(x,u,m)| <= c2_space (1 + |u|)
  double G_sup = 0.0;
  double gradG_sup = 0.0;
  double K = 0.0;          ///< |u*|_2 <= K
  double C1_tilde = 0.0;   ///< |gamma*|_inf <= C1_tilde (1 + |x|)
  double C2_tilde = 0.0;   ///< |gamma*'|_2 <= C2_tilde (1 + |x|)
  std::string C2_binding;  ///< "sqrt" or "linear": which power of |A|, |B| binds
  double m0_moment = 0.0;  ///< [m0]_alpha
  double m0_first_moment = 0.0;
  double R_star = 0.0;     ///< C2_tilde^alpha ([m0]_alpha + 1)
  double kappa = 0.0;      ///< 1/2-Hoelder constant of t -> m_t
  std::string kappa_binding;
  std::optional<double> Q1;  ///< |gamma*'|_inf <= Q1 (1 + |x|), needs c3 > 0
  double L_space = 0.0;      ///< spatial Lipschitz constant of V
};

/// Raw data the constants are computed from.
struct AprioriInputs {
  double T = 1.0;
  double norm_A = 0.0;
  double norm_B = 0.0;
  double alpha = 2.0;
  double radius = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c2_space = 0.0;
  double G_sup = 0.0;
  double gradG_sup = 0.0;
  double m0_moment = 0.0;
  double m0_first_moment = 0.0;
  std::optional<double> c3;
  std::optional<double> c4;
};

/// Evaluates the formulas for K, C1_tilde, C2_tilde, R_star, kappa, Q1 and
/// L_space from explicit inputs.
AprioriBounds apriori_from_inputs(const AprioriInputs& in);

/// Computes the constants from the growth envelope of the model on the ball
/// of radius e^{T|A|} (1 + max_j |x_j|), with |G|_inf and |D_xG|_inf
/// estimated by sampling that ball. c3, c4 are the declared (H1) constants.
AprioriBounds apriori_bounds(const LinearDynamics& dyn, const LagrangianModel& model,
                             const ParticleMeasure& m0, double alpha,
                             std::optional<double> c3 = std::nullopt,
                             std::optional<double> c4 = std::nullopt,
                             std::uint64_t seed = 0);

struct BoundCertificate {
  double control_l2 = 0.0;
  double control_bound = 0.0;
  double state_sup = 0.0;
  double state_bound = 0.0;
  double velocity_l2 = 0.0;
  double velocity_bound = 0.0;
  bool pass = false;
};

inline constexpr double kBoundSlack = 1.05;

/// Checks |u|_2 <= 1.05 K, |gamma|_inf <= 1.05 C1_tilde (1+|x|) and
/// |gamma'|_2 <= 1.05 C2_tilde (1+|x|) for one solution.
BoundCertificate certify_solution(const DiscreteFlow& flow, const AprioriBounds& bounds,
                                  const OcpSolution& sol);

}  // namespace mfg
