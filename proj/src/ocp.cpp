#include "mfg/ocp.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace mfg {

void require_matching_grid(const DiscreteFlow& flow, const FlowOfMeasures& mflow) {
  if (!(flow.grid() == mflow.grid()))
    throw InvalidArgument("flow of measures is defined on a different time grid");
  if (mflow.at(0).dim() != flow.dynamics().state_dim())
    throw InvalidArgument("flow of measures has the wrong state dimension");
}

namespace {

void check_start(const DiscreteFlow& flow, int i0, const Vec& x) {
  if (i0 < 0 || i0 >= flow.grid().intervals())
    throw InvalidArgument("start node must lie in [0, N)");
  if (x.size() != flow.dynamics().state_dim())
    throw InvalidArgument("start point has the wrong dimension");
  if (!x.allFinite()) throw InvalidArgument("start point must be finite");
}

void require_finite_cost(double J) {
  if (!std::isfinite(J)) throw InvalidModel("model produced a non-finite cost");
}

}  // namespace

double ocp_cost(const DiscreteFlow& flow, const LagrangianModel& model,
                const FlowOfMeasures& mflow, int i0, const Vec& x,
                const Mat& controls) {
  require_matching_grid(flow, mflow);
  check_start(flow, i0, x);
  const Path path = integrate_path(flow, i0, x, controls);
  const double dt = flow.grid().dt();
  double J = 0.0;
  for (int s = 0; s < path.steps(); ++s)
    J += dt * model.lagrangian(path.states.col(s), controls.col(s), mflow.at(i0 + s));
  J += model.terminal(path.final_state(), mflow.at(flow.grid().intervals()));
  require_finite_cost(J);
  return J;
}

CostGradient ocp_cost_gradient(const DiscreteFlow& flow, const LagrangianModel& model,
                               const FlowOfMeasures& mflow, int i0, const Vec& x,
                               const Mat& controls) {
  require_matching_grid(flow, mflow);
  check_start(flow, i0, x);
  CostGradient out;
  out.path = integrate_path(flow, i0, x, controls);
  const int steps = out.path.steps();
  const int N = flow.grid().intervals();
  const double dt = flow.grid().dt();
  const ParticleMeasure& mT = mflow.at(N);

  double J = model.terminal(out.path.final_state(), mT);
  out.adjoint.resize(flow.dynamics().state_dim(), steps + 1);
  out.adjoint.col(steps) = model.terminal_dx(out.path.final_state(), mT);
  out.grad.resize(controls.rows(), steps);
  for (int s = steps - 1; s >= 0; --s) {
    const Vec xs = out.path.states.col(s);
    const Vec us = controls.col(s);
    const ParticleMeasure& m = mflow.at(i0 + s);
    J += dt * model.lagrangian(xs, us, m);
    out.grad.col(s) = dt * model.running_du(xs, us) +
                      flow.Gamma().transpose() * out.adjoint.col(s + 1);
    out.adjoint.col(s) = flow.Phi().transpose() * out.adjoint.col(s + 1) +
                         dt * model.lagrangian_dx(xs, us, m);
  }
  require_finite_cost(J);
  if (!out.grad.allFinite()) throw InvalidModel("model produced a non-finite gradient");
  out.cost = J;
  return out;
}

OcpSolution solve_best_response(const DiscreteFlow& flow, const LagrangianModel& model,
                                const FlowOfMeasures& mflow, int i0, const Vec& x,
                                const std::optional<Mat>& init,
                                const OcpOptions& options) {
  require_matching_grid(flow, mflow);
  check_start(flow, i0, x);
  const int k = flow.dynamics().control_dim();
  const int steps = flow.grid().intervals() - i0;
  Mat u0 = Mat::Zero(k, steps);
  if (init) {
    if (init->rows() != k || init->cols() != steps)
      throw InvalidArgument("initial control sequence has the wrong shape");
    u0 = *init;
  }
  // Work in v = sqrt(dt) u so that the Euclidean norm of v is the L2 norm
  // of the control.
  const double scale = std::sqrt(flow.grid().dt());
  const Eigen::Index n = static_cast<Eigen::Index>(k) * steps;

  auto evaluate = [&](const Vec& v) {
    const Mat u = Eigen::Map<const Mat>(v.data(), k, steps) / scale;
    CostGradient cg = ocp_cost_gradient(flow, model, mflow, i0, x, u);
    return cg;
  };
  auto flat_grad = [&](const CostGradient& cg) {
    return Vec(Eigen::Map<const Vec>(cg.grad.data(), n) / scale);
  };
  auto to_solution = [&](const CostGradient& cg, const Vec& g, int iterations) {
    OcpSolution sol;
    sol.path = cg.path;
    sol.cost = cg.cost;
    sol.adjoint = cg.adjoint;
    sol.grad_norm = g.norm();
    sol.iterations = iterations;
    return sol;
  };

  Vec v = Eigen::Map<const Vec>(u0.data(), n) * scale;
  CostGradient cg = evaluate(v);
  Vec g = flat_grad(cg);
  std::deque<std::pair<Vec, Vec>> memory;
  bool restarted = false;

  for (int it = 0; it < options.max_iter; ++it) {
    if (g.norm() <= options.tol_grad * (1.0 + std::abs(cg.cost))) {
      OcpSolution sol = to_solution(cg, g, it);
      sol.pmp_residual = pmp_residual(flow, model, mflow, sol);
      return sol;
    }
    // Two-loop recursion.
    Vec q = -g;
    std::vector<double> alphas(memory.size());
    for (std::size_t j = memory.size(); j-- > 0;) {
      const auto& [s, y] = memory[j];
      alphas[j] = s.dot(q) / y.dot(s);
      q -= alphas[j] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.squaredNorm();
    } else {
      q /= std::max(1.0, g.norm());
    }
    for (std::size_t j = 0; j < memory.size(); ++j) {
      const auto& [s, y] = memory[j];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[j] - beta) * s;
    }
    Vec dir = q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }

    double step = 1.0;
    bool accepted = false;
    CostGradient trial;
    Vec trial_v, trial_g;
    for (int ls = 0; ls < 50; ++ls) {
      trial_v = v + step * dir;
      trial = evaluate(trial_v);
      trial_g = flat_grad(trial);
      const double slack = 1e-12 * (1.0 + std::abs(cg.cost));
      const bool armijo = trial.cost <= cg.cost + 1e-4 * step * slope;
      const bool approx_wolfe = trial.cost <= cg.cost + slack &&
                                std::abs(trial_g.dot(dir)) <= 0.9 * std::abs(slope);
      if (armijo || approx_wolfe) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty() && !restarted) {
        memory.clear();
        restarted = true;
        continue;
      }
      std::ostringstream msg;
      msg << "best response line search failed after " << it
          << " iterations: J = " << cg.cost << ", |grad| = " << g.norm();
      throw OcpFailure(msg.str(), to_solution(cg, g, it));
    }
    restarted = false;
    Vec s = trial_v - v;
    Vec y = trial_g - g;
    if (s.dot(y) > 1e-14 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    v = trial_v;
    cg = std::move(trial);
    g = trial_g;
  }
  if (g.norm() <= options.tol_grad * (1.0 + std::abs(cg.cost))) {
    OcpSolution sol = to_solution(cg, g, options.max_iter);
    sol.pmp_residual = pmp_residual(flow, model, mflow, sol);
    return sol;
  }
  std::ostringstream msg;
  msg << "best response did not converge in " << options.max_iter
      << " iterations: |grad| = " << g.norm();
  throw OcpFailure(msg.str(), to_solution(cg, g, options.max_iter));
}

OcpSolution solve_multistart(const DiscreteFlow& flow, const LagrangianModel& model,
                             const FlowOfMeasures& mflow, int i0, const Vec& x,
                             const std::vector<Mat>& starts, const OcpOptions& options) {
  if (starts.empty()) throw InvalidArgument("solve_multistart needs at least one start");
  std::optional<OcpSolution> best;
  std::exception_ptr failure;
  for (const Mat& init : starts) {
    try {
      OcpSolution sol = solve_best_response(flow, model, mflow, i0, x, init, options);
      if (!best) {
        best = std::move(sol);
        continue;
      }
      const double tie = 1e-12 * (1.0 + std::abs(best->cost));
      if (sol.cost < best->cost - tie ||
          (sol.cost <= best->cost + tie && sol.controls().norm() < best->controls().norm()))
        best = std::move(sol);
    } catch (const NumericalFailure&) {
      failure = std::current_exception();
    }
  }
  if (!best) std::rethrow_exception(failure);
  return *best;
}

double pmp_residual(const DiscreteFlow& flow, const LagrangianModel& model,
                    const FlowOfMeasures& mflow, const OcpSolution& sol) {
  const LinearDynamics& dyn = flow.dynamics();
  const double dt = flow.grid().dt();
  const Path& path = sol.path;
  double worst = 0.0;
  for (int s = 0; s < path.steps(); ++s) {
    const Vec xs = path.states.col(s);
    const Vec xn = path.states.col(s + 1);
    const Vec mid = 0.5 * (xs + xn);
    const Vec pn = sol.adjoint.col(s + 1);
    const ParticleMeasure& m = mflow.at(path.start_node + s);
    const Vec dp_mid = -(dyn.A() * mid + dyn.B() * hamiltonian_maximizer(dyn, model, mid, pn));
    const HamiltonianGradient hg = hamiltonian_grad(dyn, model, xs, pn, m);
    const double state_gap = ((xn - xs) / dt + dp_mid).norm();
    const double adjoint_gap = ((pn - sol.adjoint.col(s)) / dt - hg.dx).norm();
    const double control_gap = (path.controls.col(s) - hg.u_star).norm();
    worst = std::max(worst, state_gap + adjoint_gap + control_gap);
  }
  return worst;
}

}  // namespace mfg
