#include "mfg/models.hpp"

#include <cmath>

namespace mfg {

CouplingKind parse_coupling_kind(const std::string& name) {
  if (name == "none") return CouplingKind::None;
  if (name == "mean") return CouplingKind::Mean;
  if (name == "convolution") return CouplingKind::Convolution;
  throw InvalidArgument("unknown coupling type '" + name + "'");
}

std::string coupling_kind_name(CouplingKind kind) {
  switch (kind) {
    case CouplingKind::None: return "none";
    case CouplingKind::Mean: return "mean";
    case CouplingKind::Convolution: return "convolution";
  }
  return "none";
}

CompositeModel::CompositeModel(ModelSpec spec) : spec_(spec) {
  const double params[] = {spec.q, spec.beta, spec.theta, spec.amplitude,
                           spec.width, spec.terminal_g, spec.terminal_theta};
  for (double v : params)
    if (!std::isfinite(v)) throw InvalidArgument("model parameters must be finite");
  if (spec.beta < 0.0) throw InvalidArgument("model beta must be nonnegative");
  if (spec.coupling == CouplingKind::Convolution && !(spec.width > 0.0))
    throw InvalidArgument("convolution width must be positive");
}

double CompositeModel::running(const Vec& x, const Vec& u) const {
  double v = 0.5 * u.squaredNorm() + 0.5 * spec_.q * x.squaredNorm();
  if (spec_.beta != 0.0)
    v += spec_.beta * ((1.0 + u.array().square()).sqrt() - 1.0).sum();
  return v;
}

Vec CompositeModel::running_dx(const Vec& x, const Vec&) const { return spec_.q * x; }

Vec CompositeModel::running_du(const Vec&, const Vec& u) const {
  Vec g = u;
  if (spec_.beta != 0.0)
    g.array() += spec_.beta * u.array() / (1.0 + u.array().square()).sqrt();
  return g;
}

Mat CompositeModel::running_duu(const Vec&, const Vec& u) const {
  Vec diag = Vec::Ones(u.size());
  if (spec_.beta != 0.0)
    diag.array() += spec_.beta * (1.0 + u.array().square()).pow(-1.5);
  return diag.asDiagonal();
}

Mat CompositeModel::running_dxu(const Vec& x, const Vec& u) const {
  return Mat::Zero(x.size(), u.size());
}

double CompositeModel::coupling(const Vec& x, const ParticleMeasure& m) const {
  switch (spec_.coupling) {
    case CouplingKind::None: return 0.0;
    case CouplingKind::Mean: return spec_.theta * x.dot(m.mean());
    case CouplingKind::Convolution: {
      const double s2 = spec_.width * spec_.width;
      double v = 0.0;
      for (int j = 0; j < m.size(); ++j)
        v += m.weight(j) * std::exp(-(x - m.point(j)).squaredNorm() / (2.0 * s2));
      return spec_.amplitude * v;
    }
  }
  return 0.0;
}

Vec CompositeModel::coupling_dx(const Vec& x, const ParticleMeasure& m) const {
  switch (spec_.coupling) {
    case CouplingKind::None: return Vec::Zero(x.size());
    case CouplingKind::Mean: return spec_.theta * m.mean();
    case CouplingKind::Convolution: {
      const double s2 = spec_.width * spec_.width;
      Vec g = Vec::Zero(x.size());
      for (int j = 0; j < m.size(); ++j) {
        const Vec z = x - m.point(j);
        g -= m.weight(j) * std::exp(-z.squaredNorm() / (2.0 * s2)) / s2 * z;
      }
      return spec_.amplitude * g;
    }
  }
  return Vec::Zero(x.size());
}

double CompositeModel::terminal(const Vec& x, const ParticleMeasure& m) const {
  double v = 0.5 * spec_.terminal_g * x.squaredNorm();
  if (spec_.terminal_theta != 0.0) v += spec_.terminal_theta * x.dot(m.mean());
  return v;
}

Vec CompositeModel::terminal_dx(const Vec& x, const ParticleMeasure& m) const {
  Vec g = spec_.terminal_g * x;
  if (spec_.terminal_theta != 0.0) g += spec_.terminal_theta * m.mean();
  return g;
}

ModelConstants CompositeModel::constants() const {
  ModelConstants c;
  c.C0 = 1.0 + spec_.beta;
  c.C1 = 0.0;
  if (spec_.q == 0.0) c.C2 = 0.0;
  if (spec_.coupling == CouplingKind::Convolution)
    c.Q_L = std::abs(spec_.amplitude) * std::exp(-0.5) / spec_.width;
  else if (spec_.coupling == CouplingKind::None)
    c.Q_L = 0.0;
  return c;
}

std::optional<double> CompositeModel::zero_control_bound(double radius) const {
  return std::abs(spec_.q) * (0.5 * radius * radius + radius);
}

std::optional<GrowthConstants> CompositeModel::growth(double radius) const {
  GrowthConstants g;
  g.c0 = std::min(0.5, 2.0 / (1.0 + spec_.beta));
  double c1 = 0.5 * std::abs(spec_.q) * radius * radius;
  // The measure is assumed supported in the same ball.
  if (spec_.coupling == CouplingKind::Mean) c1 += std::abs(spec_.theta) * radius * radius;
  if (spec_.coupling == CouplingKind::Convolution) c1 += std::abs(spec_.amplitude);
  g.c1 = c1;
  return g;
}

std::string CompositeModel::name() const {
  std::string n = spec_.beta == 0.0 ? "quadratic" : "pseudo-huber";
  return n + "+" + coupling_kind_name(spec_.coupling);
}

}  // namespace mfg
