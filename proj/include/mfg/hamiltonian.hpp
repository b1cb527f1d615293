#pragma once

#include "mfg/dynamics.hpp"
#include "mfg/measures.hpp"
#include "mfg/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace mfg {

/// Constants a model declares for its Tonelli and semiconcavity
/// hypotheses. Unknown values stay empty.
struct ModelConstants {
  std::optional<double> C0;   ///< I/C0 <= D_uu l <= C0 I
  std::optional<double> C1;   ///< |D_xu l| <= C1 (1 + |u|)
  std::optional<double> C2;   ///< |l(x,0)| + |D_x l(x,0)| + |D_u l(x,0)| <= C2
  std::optional<double> Q_L;  ///< d1-Lipschitz constant of the coupling
  std::optional<double> w_L;
  std::optional<double> w_G;
};

/// Growth data on the ball |x| <= radius:
///   c0 |u|^2 - c1 <= L(x,u,m) <= c1 + |u|^2 / c0,
///   |D_p H(x,p,m)| <= c2 (1 + |x| + |p|),
/// and (optionally) the constants of <D_x H, p> >= c3 |p|^2 - c4.
struct GrowthConstants {
  double c0 = 0.0;
  double c1 = 0.0;
  std::optional<double> c2;
  std::optional<double> c3;
  std::optional<double> c4;
};

/// Split Lagrangian L(x,u,m) = l(x,u) + F(x,m) with terminal cost G(x,m).
/// Implementations must be re-entrant.
class LagrangianModel {
 public:
  virtual ~LagrangianModel() = default;

  virtual double running(const Vec& x, const Vec& u) const = 0;
  virtual Vec running_dx(const Vec& x, const Vec& u) const = 0;
  virtual Vec running_du(const Vec& x, const Vec& u) const = 0;
  virtual Mat running_duu(const Vec& x, const Vec& u) const = 0;
  /// d x k block of mixed second derivatives.
  virtual Mat running_dxu(const Vec& x, const Vec& u) const = 0;

  virtual double coupling(const Vec& x, const ParticleMeasure& m) const = 0;
  virtual Vec coupling_dx(const Vec& x, const ParticleMeasure& m) const = 0;

  virtual double terminal(const Vec& x, const ParticleMeasure& m) const = 0;
  virtual Vec terminal_dx(const Vec& x, const ParticleMeasure& m) const = 0;

  virtual ModelConstants constants() const { return {}; }

  /// Analytic growth envelope on |x| <= radius, or empty if unknown.
  virtual std::optional<GrowthConstants> growth(double radius) const {
    (void)radius;
    return std::nullopt;
  }

  /// Bound on |l(x,0)| + |D_x l(x,0)| + |D_u l(x,0)| over |x| <= radius.
  virtual std::optional<double> zero_control_bound(double radius) const {
    (void)radius;
    return constants().C2;
  }

  /// True when l is exactly (1/2)|u|^2 plus a function of x.
  virtual bool unit_quadratic_in_control() const { return false; }

  virtual std::string name() const { return "custom"; }

  double lagrangian(const Vec& x, const Vec& u, const ParticleMeasure& m) const {
    return running(x, u) + coupling(x, m);
  }
  Vec lagrangian_dx(const Vec& x, const Vec& u, const ParticleMeasure& m) const {
    return running_dx(x, u) + coupling_dx(x, m);
  }
};

struct HamiltonianValue {
  double H = 0.0;
  Vec u_star;
  int newton_iterations = 0;
};

/// H(x,p,m) = sup_u { -<p, Ax + Bu> - L(x,u,m) } by damped Newton on the
/// strictly concave inner problem, started at u = -B^T p.
HamiltonianValue legendre_hamiltonian(const LinearDynamics& dyn,
                                      const LagrangianModel& model, const Vec& x,
                                      const Vec& p, const ParticleMeasure& m);

/// Inner maximizer only (stationarity D_u l(x,u) = -B^T p). Newton starts
/// at *start when given.
Vec hamiltonian_maximizer(const LinearDynamics& dyn, const LagrangianModel& model,
                          const Vec& x, const Vec& p, const Vec* start = nullptr);

struct HamiltonianGradient {
  Vec dx;  ///< D_x H = -A^T p - D_x L(x, u*, m)
  Vec dp;  ///< D_p H = -(A x + B u*)
  Vec u_star;
};

HamiltonianGradient hamiltonian_grad(const LinearDynamics& dyn,
                                     const LagrangianModel& model, const Vec& x,
                                     const Vec& p, const ParticleMeasure& m);

/// Closed form -<p,Ax> + |B^T p|^2 - L(x, -B^T p, m). It equals the true
/// Hamiltonian only when l is (1/2)|u|^2 plus a function of x.
double explicit_hamiltonian_formula(const LinearDynamics& dyn,
                                    const LagrangianModel& model, const Vec& x,
                                    const Vec& p, const ParticleMeasure& m);

/// Axis-aligned box [lo, hi].
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  double diameter() const { return (hi - lo).norm(); }
  /// Radius of the smallest origin-centred ball containing the box.
  double radius() const { return lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm(); }
  bool contains(const Vec& x, double slack = 0.0) const {
    return ((x - lo).array() >= -slack).all() && ((hi - x).array() >= -slack).all();
  }
  static Box cube(int dim, double half_width) {
    return Box{Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width)};
  }
};

struct ConstantCheck {
  std::string name;
  double declared = 0.0;
  double observed = 0.0;  ///< worst value of the checked quantity
  bool pass = false;
};

struct TonelliReport {
  std::vector<ConstantCheck> checks;
  bool pass = false;
  int samples = 0;
};

/// Samples (x,u) in state_box x control_box and checks the declared Tonelli
/// constants and the growth envelope. With a measure, L includes F(x,m).
TonelliReport check_tonelli(const LagrangianModel& model, const Box& state_box,
                            const Box& control_box, int n_samples,
                            std::uint64_t seed,
                            const ParticleMeasure* m = nullptr);

struct H1Report {
  double c3_hat = 0.0;  ///< largest c3 valid at all samples given the declared c4
  double c4_hat = 0.0;  ///< smallest c4 valid at all samples given the declared c3
  double worst_margin = 0.0;
  bool pass = false;
  int samples = 0;
};

/// Checks <D_x H(x,p,m), p> >= c3 |p|^2 - c4 over samples of (x,p).
H1Report check_h1(const LinearDynamics& dyn, const LagrangianModel& model,
                  const Box& state_box, const Box& covector_box,
                  const ParticleMeasure& m, double c3, double c4, int n_samples,
                  std::uint64_t seed);

/// Sampled max of |D_p H| / (1 + |x| + |p|).
double fit_c2(const LinearDynamics& dyn, const LagrangianModel& model,
              const Box& state_box, const Box& covector_box,
              const ParticleMeasure& m, int n_samples, std::uint64_t seed);

}  // namespace mfg
