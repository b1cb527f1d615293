#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/measures.hpp"

#include <optional>

namespace mfg {

struct OcpOptions {
  double tol_grad = 1e-8;  ///< stop when |grad J| <= tol_grad (1 + |J|)
  int max_iter = 1000;
  int memory = 10;
};

struct OcpSolution {
  Path path;
  double cost = 0.0;
  /// Discrete adjoint, one column per node start_node..N (p_N = D_x G).
  Mat adjoint;
  /// L2-scaled gradient norm at return.
  double grad_norm = 0.0;
  double pmp_residual = 0.0;
  int iterations = 0;

  const Mat& controls() const { return path.controls; }
};

/// Thrown when the line search stalls. Carries the last iterate.
class OcpFailure : public NumericalFailure {
 public:
  OcpFailure(const std::string& what, OcpSolution last)
      : NumericalFailure(what), last_(std::move(last)) {}
  const OcpSolution& last_iterate() const { return last_; }

 private:
  OcpSolution last_;
};

/// Discrete cost
///   J = sum_i dt L(x_i, u_i, m_{t_i}) + G(x_N, m_T)
/// for the path started at node i0 from x.
double ocp_cost(const DiscreteFlow& flow, const LagrangianModel& model,
                const FlowOfMeasures& mflow, int i0, const Vec& x,
                const Mat& controls);

struct CostGradient {
  double cost = 0.0;
  Mat grad;     ///< dJ/du_i, one column per interval
  Path path;
  Mat adjoint;  ///< lambda_i, one column per node
};

/// Cost and exact gradient through the discrete adjoint
///   lambda_N = D_x G(x_N),
///   lambda_i = Phi^T lambda_{i+1} + dt D_x L(x_i, u_i, m_i),
///   dJ/du_i  = dt D_u l(x_i, u_i) + Gamma^T lambda_{i+1}.
CostGradient ocp_cost_gradient(const DiscreteFlow& flow, const LagrangianModel& model,
                               const FlowOfMeasures& mflow, int i0, const Vec& x,
                               const Mat& controls);

/// Locally minimizes J over the stacked controls with L-BFGS, started at
/// init (zero controls when absent).
OcpSolution solve_best_response(const DiscreteFlow& flow, const LagrangianModel& model,
                                const FlowOfMeasures& mflow, int i0, const Vec& x,
                                const std::optional<Mat>& init = std::nullopt,
                                const OcpOptions& options = {});

/// Solves from every initial control sequence in starts and keeps the
/// lowest cost, breaking near ties (1e-12 relative) by the smaller control
/// norm. Starts whose line search fails are skipped; if all fail the last
/// failure is rethrown.
OcpSolution solve_multistart(const DiscreteFlow& flow, const LagrangianModel& model,
                             const FlowOfMeasures& mflow, int i0, const Vec& x,
                             const std::vector<Mat>& starts,
                             const OcpOptions& options = {});

/// Max over intervals of
///   |(x_{i+1}-x_i)/dt + D_pH(xbar_i, p_{i+1})| + |(p_{i+1}-p_i)/dt - D_xH(x_i, p_{i+1})|
///   + |u_i - u*(x_i, p_{i+1})|.
double pmp_residual(const DiscreteFlow& flow, const LagrangianModel& model,
                    const FlowOfMeasures& mflow, const OcpSolution& sol);

/// Checks that mflow lives on the grid of flow.
void require_matching_grid(const DiscreteFlow& flow, const FlowOfMeasures& mflow);

}  // namespace mfg
