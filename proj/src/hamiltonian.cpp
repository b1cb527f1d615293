#include "mfg/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace mfg {

namespace {

constexpr int kMaxNewtonIterations = 100;

Vec sample_box(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(box.dim());
  for (int k = 0; k < box.dim(); ++k) x(k) = box.lo(k) + unit(rng) * (box.hi(k) - box.lo(k));
  return x;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidModel(std::string("model returned non-finite ") + what);
}

}  // namespace

Vec hamiltonian_maximizer(const LinearDynamics& dyn, const LagrangianModel& model,
                          const Vec& x, const Vec& p, const Vec* start) {
  if (x.size() != dyn.state_dim() || p.size() != dyn.state_dim())
    throw InvalidArgument("hamiltonian: x and p must have the state dimension");
  const Vec btp = dyn.B().transpose() * p;
  // Minimize phi(u) = <B^T p, u> + l(x, u).
  auto phi = [&](const Vec& u) { return btp.dot(u) + model.running(x, u); };
  auto grad = [&](const Vec& u) { return Vec(btp + model.running_du(x, u)); };
  const double tol = 1e-10 * std::max(1.0, btp.norm());

  if (start && start->size() != btp.size()) throw InvalidArgument("hamiltonian: start has the wrong size");
  Vec u = start ? *start : Vec(-btp);
  double f = phi(u);
  Vec g = grad(u);
  require_finite(f, "running cost");
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    const double gnorm = g.norm();
    if (!std::isfinite(gnorm)) throw InvalidModel("model returned non-finite control gradient");
    if (gnorm <= tol) return u;
    const Mat hess = model.running_duu(x, u);
    Eigen::LDLT<Mat> ldlt(hess);
    Vec dir;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) dir = ldlt.solve(-g);
    if (dir.size() == 0 || !dir.allFinite() || g.dot(dir) >= 0.0) dir = -g;
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec trial = u + step * dir;
      const double ft = phi(trial);
      const Vec gt = grad(trial);
      if (std::isfinite(ft) &&
          (ft <= f + 1e-4 * step * g.dot(dir) || gt.norm() < 0.5 * gnorm)) {
        u = trial;
        f = ft;
        g = gt;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  if (g.norm() <= tol) return u;
  std::ostringstream msg;
  msg << "hamiltonian inner maximization did not converge: |grad| = " << g.norm()
      << " (tol " << tol << ") at |p| = " << p.norm() << ", |x| = " << x.norm();
  throw NumericalFailure(msg.str());
}

HamiltonianValue legendre_hamiltonian(const LinearDynamics& dyn,
                                      const LagrangianModel& model, const Vec& x,
                                      const Vec& p, const ParticleMeasure& m) {
  HamiltonianValue out;
  out.u_star = hamiltonian_maximizer(dyn, model, x, p);
  out.H = -p.dot(dyn.A() * x + dyn.B() * out.u_star) - model.running(x, out.u_star) -
          model.coupling(x, m);
  require_finite(out.H, "Hamiltonian");
  return out;
}

HamiltonianGradient hamiltonian_grad(const LinearDynamics& dyn,
                                     const LagrangianModel& model, const Vec& x,
                                     const Vec& p, const ParticleMeasure& m) {
  HamiltonianGradient out;
  out.u_star = hamiltonian_maximizer(dyn, model, x, p);
  out.dp = -(dyn.A() * x + dyn.B() * out.u_star);
  out.dx = -dyn.A().transpose() * p - model.lagrangian_dx(x, out.u_star, m);
  return out;
}

double explicit_hamiltonian_formula(const LinearDynamics& dyn,
                                    const LagrangianModel& model, const Vec& x,
                                    const Vec& p, const ParticleMeasure& m) {
  const Vec btp = dyn.B().transpose() * p;
  return -p.dot(dyn.A() * x) + btp.squaredNorm() - model.lagrangian(x, -btp, m);
}

TonelliReport check_tonelli(const LagrangianModel& model, const Box& state_box,
                            const Box& control_box, int n_samples,
                            std::uint64_t seed, const ParticleMeasure* m) {
  std::mt19937_64 rng(seed);
  const ModelConstants declared = model.constants();
  const auto growth = model.growth(state_box.radius());
  const int k = control_box.dim();

  double min_eig = std::numeric_limits<double>::infinity();
  double max_eig = -std::numeric_limits<double>::infinity();
  double mixed_ratio = 0.0;
  double zero_control = 0.0;
  double growth_lower = -std::numeric_limits<double>::infinity();
  double growth_upper = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < n_samples; ++s) {
    const Vec x = sample_box(state_box, rng);
    Vec u = sample_box(control_box, rng);
    if (s % 4 == 0 && control_box.contains(Vec::Zero(k))) u.setZero();
    Eigen::SelfAdjointEigenSolver<Mat> eig(model.running_duu(x, u));
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
    max_eig = std::max(max_eig, eig.eigenvalues().maxCoeff());
    mixed_ratio = std::max(mixed_ratio, operator_norm(model.running_dxu(x, u)) / (1.0 + u.norm()));

    const Vec zero = Vec::Zero(k);
    double l0 = model.running(x, zero);
    Vec lx0 = model.running_dx(x, zero);
    if (m) {
      l0 += model.coupling(x, *m);
      lx0 += model.coupling_dx(x, *m);
    }
    zero_control = std::max(zero_control,
                            std::abs(l0) + lx0.norm() + model.running_du(x, zero).norm());
    if (growth) {
      const double L = model.running(x, u) + (m ? model.coupling(x, *m) : 0.0);
      const double u2 = u.squaredNorm();
      growth_lower = std::max(growth_lower, growth->c0 * u2 - growth->c1 - L);
      growth_upper = std::max(growth_upper, L - growth->c1 - u2 / growth->c0);
    }
  }

  TonelliReport report;
  report.samples = n_samples;
  constexpr double tol = 1e-12;
  if (declared.C0) {
    report.checks.push_back({"C0_lower", 1.0 / *declared.C0, min_eig,
                             min_eig >= 1.0 / *declared.C0 - tol});
    report.checks.push_back({"C0_upper", *declared.C0, max_eig, max_eig <= *declared.C0 + tol});
  }
  if (declared.C1)
    report.checks.push_back({"C1", *declared.C1, mixed_ratio, mixed_ratio <= *declared.C1 + tol});
  if (declared.C2)
    report.checks.push_back({"C2", *declared.C2, zero_control, zero_control <= *declared.C2 + tol});
  if (growth) {
    report.checks.push_back({"growth_lower", 0.0, growth_lower, growth_lower <= tol});
    report.checks.push_back({"growth_upper", 0.0, growth_upper, growth_upper <= tol});
  }
  report.pass = true;
  for (const auto& c : report.checks) report.pass = report.pass && c.pass;
  return report;
}

H1Report check_h1(const LinearDynamics& dyn, const LagrangianModel& model,
                  const Box& state_box, const Box& covector_box,
                  const ParticleMeasure& m, double c3, double c4, int n_samples,
                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  H1Report report;
  report.samples = n_samples;
  report.c3_hat = std::numeric_limits<double>::infinity();
  report.c4_hat = -std::numeric_limits<double>::infinity();
  report.worst_margin = std::numeric_limits<double>::infinity();
  report.pass = true;
  for (int s = 0; s < n_samples; ++s) {
    const Vec x = sample_box(state_box, rng);
    const Vec p = sample_box(covector_box, rng);
    const double pairing = hamiltonian_grad(dyn, model, x, p, m).dx.dot(p);
    const double p2 = p.squaredNorm();
    if (p2 > 0.0) report.c3_hat = std::min(report.c3_hat, (pairing + c4) / p2);
    report.c4_hat = std::max(report.c4_hat, c3 * p2 - pairing);
    const double margin = pairing - (c3 * p2 - c4);
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < -1e-12 * (1.0 + std::abs(pairing))) report.pass = false;
  }
  return report;
}

double fit_c2(const LinearDynamics& dyn, const LagrangianModel& model,
              const Box& state_box, const Box& covector_box,
              const ParticleMeasure& m, int n_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double c2 = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Vec x = sample_box(state_box, rng);
    const Vec p = sample_box(covector_box, rng);
    const Vec dp = hamiltonian_grad(dyn, model, x, p, m).dp;
    c2 = std::max(c2, dp.norm() / (1.0 + x.norm() + p.norm()));
  }
  return c2;
}

}  // namespace mfg
