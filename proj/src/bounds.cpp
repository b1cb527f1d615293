#include "mfg/bounds.hpp"

#include <cmath>
#include <random>

namespace mfg {

namespace {

// Deterministic sample of the closed ball: the centre, the axis points on
// the sphere, and uniform draws.
std::vector<Vec> ball_samples(int d, double radius, int n, std::uint64_t seed) {
  std::vector<Vec> pts;
  pts.push_back(Vec::Zero(d));
  for (int k = 0; k < d; ++k) {
    Vec e = Vec::Zero(d);
    e(k) = radius;
    pts.push_back(e);
    pts.push_back(-e);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  for (int s = 0; s < n; ++s) {
    Vec z(d);
    for (int k = 0; k < d; ++k) z(k) = normal(rng);
    const double nz = z.norm();
    if (nz == 0.0) continue;
    pts.push_back(z / nz * radius * std::pow(unit(rng), 1.0 / d));
  }
  return pts;
}

}  // namespace

AprioriBounds apriori_from_inputs(const AprioriInputs& in) {
  if (!(in.c0 > 0.0)) throw InvalidModel("growth constant c0 must be positive");
  if (!(in.alpha > 1.0)) throw InvalidArgument("alpha must exceed 1");
  AprioriBounds b;
  b.alpha = in.alpha;
  b.radius = in.radius;
  b.c0 = in.c0;
  b.c1 = in.c1;
  b.c2 = in.c2;
  b.c2_space = in.c2_space;
  b.G_sup = in.G_sup;
  b.gradG_sup = in.gradG_sup;
  b.m0_moment = in.m0_moment;
  b.m0_first_moment = in.m0_first_moment;
  const double T = in.T;
  const double nA = in.norm_A;
  const double nB = in.norm_B;
  const double eTA = std::exp(T * nA);

  b.K = std::sqrt(2.0 / b.c0 * (b.c1 * T + b.G_sup));
  b.C1_tilde = eTA * std::max(1.0, nB * std::sqrt(T) * b.K);
  const double sqrt_reading = std::sqrt(nA) * std::sqrt(T) * b.C1_tilde + std::sqrt(nB) * b.K;
  const double linear_reading = nA * std::sqrt(T) * b.C1_tilde + nB * b.K;
  b.C2_tilde = std::max(sqrt_reading, linear_reading);
  b.C2_binding = sqrt_reading >= linear_reading ? "sqrt" : "linear";

  b.R_star = std::pow(b.C2_tilde, b.alpha) * (b.m0_moment + 1.0);

  const double spread = std::sqrt(T) * b.C1_tilde * (1.0 + b.m0_first_moment);
  const double kappa_sqrt = std::sqrt(nA) * spread + std::sqrt(nB) * b.K;
  const double kappa_linear = nA * spread + nB * b.K;
  b.kappa = std::max(kappa_sqrt, kappa_linear);
  b.kappa_binding = kappa_sqrt >= kappa_linear ? "sqrt" : "linear";

  if (in.c3 && in.c4 && *in.c3 > 0.0 && *in.c4 >= 0.0)
    b.Q1 = b.c2 * (1.0 + b.C1_tilde +
                   std::sqrt(b.gradG_sup * b.gradG_sup + *in.c4 / (2.0 * *in.c3)));

  b.L_space = b.c2_space * T * eTA + b.c2_space * std::sqrt(T) * b.K +
              std::max(b.G_sup, b.gradG_sup) * eTA;
  return b;
}

AprioriBounds apriori_bounds(const LinearDynamics& dyn, const LagrangianModel& model,
                             const ParticleMeasure& m0, double alpha,
                             std::optional<double> c3, std::optional<double> c4,
                             std::uint64_t seed) {
  if (!(alpha > 1.0)) throw InvalidArgument("alpha must exceed 1");
  if (m0.dim() != dyn.state_dim()) throw InvalidArgument("m0 dimension does not match the dynamics");
  AprioriInputs in;
  in.T = dyn.horizon();
  in.norm_A = operator_norm(dyn.A());
  in.norm_B = operator_norm(dyn.B());
  in.alpha = alpha;
  in.c3 = c3;
  in.c4 = c4;
  double max_start = 0.0;
  for (int j = 0; j < m0.size(); ++j) max_start = std::max(max_start, m0.point(j).norm());
  in.radius = std::exp(in.T * in.norm_A) * (1.0 + max_start);

  const auto growth = model.growth(in.radius);
  if (!growth) throw InvalidModel("model '" + model.name() + "' declares no growth constants");
  in.c0 = growth->c0;
  in.c1 = growth->c1;

  const ModelConstants mc = model.constants();
  const auto zero_bound = model.zero_control_bound(in.radius);
  if (!mc.C0 || !zero_bound)
    throw InvalidModel("model '" + model.name() + "' lacks the constants C0 and C2");
  const double nB = in.norm_B;
  in.c2 = growth->c2.value_or(std::max({in.norm_A, *mc.C0 * nB * nB, *mc.C0 * nB * *zero_bound}));

  const int d = dyn.state_dim();
  const std::vector<Vec> pts = ball_samples(d, in.radius, 2000, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  const Vec zero_u = Vec::Zero(dyn.control_dim());
  double dxl_sup = 0.0;
  for (const Vec& x : pts) {
    const ParticleMeasure other = ParticleMeasure::dirac(pts[pick(rng)]);
    for (const ParticleMeasure* m : {&m0, &other}) {
      in.G_sup = std::max(in.G_sup, std::abs(model.terminal(x, *m)));
      in.gradG_sup = std::max(in.gradG_sup, model.terminal_dx(x, *m).norm());
      dxl_sup = std::max(dxl_sup, model.lagrangian_dx(x, zero_u, *m).norm());
    }
  }
  in.c2_space = std::max(in.c2, dxl_sup + mc.C1.value_or(0.0));
  in.m0_moment = moment_alpha(m0, alpha);
  for (int j = 0; j < m0.size(); ++j) in.m0_first_moment += m0.weight(j) * m0.point(j).norm();
  return apriori_from_inputs(in);
}

BoundCertificate certify_solution(const DiscreteFlow& flow, const AprioriBounds& bounds,
                                  const OcpSolution& sol) {
  const double dt = flow.grid().dt();
  const double x = sol.path.initial_state().norm();
  BoundCertificate c;
  c.control_l2 = control_l2_norm(sol.path.controls, dt);
  c.control_bound = kBoundSlack * bounds.K;
  c.state_sup = sol.path.states.colwise().norm().maxCoeff();
  c.state_bound = kBoundSlack * bounds.C1_tilde * (1.0 + x);
  c.velocity_l2 = velocity_l2_norm(flow.dynamics(), sol.path, dt);
  c.velocity_bound = kBoundSlack * bounds.C2_tilde * (1.0 + x);
  c.pass = c.control_l2 <= c.control_bound && c.state_sup <= c.state_bound &&
           c.velocity_l2 <= c.velocity_bound;
  return c;
}

}  // namespace mfg
