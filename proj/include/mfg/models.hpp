#pragma once

#include "mfg/hamiltonian.hpp"

#include <string>

namespace mfg {

enum class CouplingKind { None, Mean, Convolution };

/// Parameters of the built-in family
///   l(x,u) = 1/2 |u|^2 + q/2 |x|^2 + beta sum_k (sqrt(1 + u_k^2) - 1)
///   F(x,m) = theta <x, mean(m)>                       (Mean)
///          = a sum_j w_j exp(-|x - x_j|^2 / (2 s^2))  (Convolution)
///   G(x,m) = g/2 |x|^2 + theta_G <x, mean(m)>
struct ModelSpec {
  double q = 0.0;
  double beta = 0.0;
  CouplingKind coupling = CouplingKind::None;
  double theta = 0.0;
  double amplitude = 0.0;
  double width = 1.0;
  double terminal_g = 0.0;
  double terminal_theta = 0.0;
};

CouplingKind parse_coupling_kind(const std::string& name);
std::string coupling_kind_name(CouplingKind kind);

class CompositeModel final : public LagrangianModel {
 public:
  explicit CompositeModel(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }

  double running(const Vec& x, const Vec& u) const override;
  Vec running_dx(const Vec& x, const Vec& u) const override;
  Vec running_du(const Vec& x, const Vec& u) const override;
  Mat running_duu(const Vec& x, const Vec& u) const override;
  Mat running_dxu(const Vec& x, const Vec& u) const override;

  double coupling(const Vec& x, const ParticleMeasure& m) const override;
  Vec coupling_dx(const Vec& x, const ParticleMeasure& m) const override;

  double terminal(const Vec& x, const ParticleMeasure& m) const override;
  Vec terminal_dx(const Vec& x, const ParticleMeasure& m) const override;

  ModelConstants constants() const override;
  std::optional<GrowthConstants> growth(double radius) const override;
  std::optional<double> zero_control_bound(double radius) const override;
  bool unit_quadratic_in_control() const override { return spec_.beta == 0.0; }
  std::string name() const override;

 private:
  ModelSpec spec_;
};

}  // namespace mfg
