#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/measures.hpp"
#include "mfg/models.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

using mfg::Mat;
using mfg::Vec;

// Truncated Taylor series in long double; fine for |tM| up to ~5.
Mat expm_series(const Mat& M, double t);

// min c.x  s.t.  A x = b, x >= 0  by a dense two-phase tableau simplex.
double lp_minimize(const Mat& A, const Vec& b, const Vec& c);

// W1 as the transportation LP over all couplings.
double w1_lp(const mfg::ParticleMeasure& mu, const mfg::ParticleMeasure& nu);

mfg::ParticleMeasure random_measure(std::mt19937_64& rng, int dim, int n, double scale = 1.0);

// max over a 1D control grid of -<p, Ax + Bu> - L(x,u,m).
double grid_hamiltonian(const mfg::LinearDynamics& dyn, const mfg::LagrangianModel& model,
                        const Vec& x, const Vec& p, const mfg::ParticleMeasure& m,
                        double u_lo, double u_hi, int n);

// Central differences of a scalar function.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6);

inline mfg::CompositeModel lq_model() {
  mfg::ModelSpec s;
  s.terminal_g = 1.0;
  return mfg::CompositeModel(s);
}

inline mfg::CompositeModel symmetric_model() {
  mfg::ModelSpec s;
  s.coupling = mfg::CouplingKind::Mean;
  s.theta = 1.0;
  s.terminal_g = 1.0;
  return mfg::CompositeModel(s);
}

inline mfg::LinearDynamics scalar_dynamics(double T = 1.0) {
  return mfg::LinearDynamics(Mat::Zero(1, 1), Mat::Identity(1, 1), T);
}

inline Vec vec1(double a) { return Vec::Constant(1, a); }

// V(t,x) = x^2 / (2 (2 - t)) for the unit LQ problem.
inline double lq_value(double t, double x) { return x * x / (2.0 * (2.0 - t)); }

// Uniform mixture of Diracs at the given 1D points.
mfg::ParticleMeasure diracs_1d(const std::vector<double>& xs, const std::vector<double>& ws = {});

// Models used only by the tests. All are one-dimensional in x and u unless noted.

// l = |u|^4, F = G = 0. Declares C0 = 1.
class QuarticModel : public mfg::LagrangianModel {
 public:
  double running(const Vec&, const Vec& u) const override { return std::pow(u.squaredNorm(), 2); }
  Vec running_dx(const Vec& x, const Vec&) const override { return Vec::Zero(x.size()); }
  Vec running_du(const Vec&, const Vec& u) const override { return 4.0 * u.squaredNorm() * u; }
  Mat running_duu(const Vec&, const Vec& u) const override {
    return 4.0 * u.squaredNorm() * Mat::Identity(u.size(), u.size()) + 8.0 * u * u.transpose();
  }
  Mat running_dxu(const Vec& x, const Vec& u) const override { return Mat::Zero(x.size(), u.size()); }
  double coupling(const Vec&, const mfg::ParticleMeasure&) const override { return 0.0; }
  Vec coupling_dx(const Vec& x, const mfg::ParticleMeasure&) const override { return Vec::Zero(x.size()); }
  double terminal(const Vec&, const mfg::ParticleMeasure&) const override { return 0.0; }
  Vec terminal_dx(const Vec& x, const mfg::ParticleMeasure&) const override { return Vec::Zero(x.size()); }
  mfg::ModelConstants constants() const override {
    mfg::ModelConstants c;
    c.C0 = 1.0;
    return c;
  }
};

// l = 1/2 u^2 + sin(x) u. Declares C0 = 1, C1 = 1.
class SineCrossModel : public mfg::LagrangianModel {
 public:
  double running(const Vec& x, const Vec& u) const override {
    return 0.5 * u.squaredNorm() + std::sin(x(0)) * u(0);
  }
  Vec running_dx(const Vec& x, const Vec& u) const override { return vec1(std::cos(x(0)) * u(0)); }
  Vec running_du(const Vec& x, const Vec& u) const override { return vec1(u(0) + std::sin(x(0))); }
  Mat running_duu(const Vec&, const Vec&) const override { return Mat::Identity(1, 1); }
  Mat running_dxu(const Vec& x, const Vec&) const override { return Mat::Constant(1, 1, std::cos(x(0))); }
  double coupling(const Vec&, const mfg::ParticleMeasure&) const override { return 0.0; }
  Vec coupling_dx(const Vec&, const mfg::ParticleMeasure&) const override { return Vec::Zero(1); }
  double terminal(const Vec&, const mfg::ParticleMeasure&) const override { return 0.0; }
  Vec terminal_dx(const Vec&, const mfg::ParticleMeasure&) const override { return Vec::Zero(1); }
  mfg::ModelConstants constants() const override {
    mfg::ModelConstants c;
    c.C0 = 1.0;
    c.C1 = 1.0;
    return c;
  }
};

// l = 1/2 |u + x|^2 in any dimension (needs k = d).
class ShiftedQuadraticModel : public mfg::LagrangianModel {
 public:
  double running(const Vec& x, const Vec& u) const override { return 0.5 * (u + x).squaredNorm(); }
  Vec running_dx(const Vec& x, const Vec& u) const override { return u + x; }
  Vec running_du(const Vec& x, const Vec& u) const override { return u + x; }
  Mat running_duu(const Vec&, const Vec& u) const override { return Mat::Identity(u.size(), u.size()); }
  Mat running_dxu(const Vec& x, const Vec&) const override { return Mat::Identity(x.size(), x.size()); }
  double coupling(const Vec&, const mfg::ParticleMeasure&) const override { return 0.0; }
  Vec coupling_dx(const Vec& x, const mfg::ParticleMeasure&) const override { return Vec::Zero(x.size()); }
  double terminal(const Vec&, const mfg::ParticleMeasure&) const override { return 0.0; }
  Vec terminal_dx(const Vec& x, const mfg::ParticleMeasure&) const override { return Vec::Zero(x.size()); }
};

// l = 1/2 |u|^2, F(x,m) = -1/2 |x|^2.
class RepulsiveModel : public mfg::LagrangianModel {
 public:
  double running(const Vec&, const Vec& u) const override { return 0.5 * u.squaredNorm(); }
  Vec running_dx(const Vec& x, const Vec&) const override { return Vec::Zero(x.size()); }
  Vec running_du(const Vec&, const Vec& u) const override { return u; }
  Mat running_duu(const Vec&, const Vec& u) const override { return Mat::Identity(u.size(), u.size()); }
  Mat running_dxu(const Vec& x, const Vec& u) const override { return Mat::Zero(x.size(), u.size()); }
  double coupling(const Vec& x, const mfg::ParticleMeasure&) const override { return -0.5 * x.squaredNorm(); }
  Vec coupling_dx(const Vec& x, const mfg::ParticleMeasure&) const override { return -x; }
  double terminal(const Vec&, const mfg::ParticleMeasure&) const override { return 0.0; }
  Vec terminal_dx(const Vec& x, const mfg::ParticleMeasure&) const override { return Vec::Zero(x.size()); }
};

}  // namespace oracle
