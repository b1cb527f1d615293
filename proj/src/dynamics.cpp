#include "mfg/dynamics.hpp"

#include "mfg/measures.hpp"

#include <cmath>
#include <string>

namespace mfg {

double operator_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

LinearDynamics::LinearDynamics(Mat A, Mat B, double horizon)
    : A_(std::move(A)), B_(std::move(B)), horizon_(horizon) {
  if (A_.rows() < 1 || A_.rows() != A_.cols())
    throw InvalidArgument("A must be a non-empty square matrix");
  if (B_.rows() != A_.rows() || B_.cols() < 1)
    throw InvalidArgument("B must have as many rows as A and at least one column");
  if (!A_.allFinite() || !B_.allFinite())
    throw InvalidArgument("A and B must have finite entries");
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
    throw InvalidArgument("horizon T must be positive and finite");
}

TimeGrid::TimeGrid(double horizon, int intervals)
    : horizon_(horizon), intervals_(intervals) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw InvalidArgument("grid horizon must be positive and finite");
  if (intervals < 2) throw InvalidArgument("grid needs N >= 2 intervals");
}

int TimeGrid::nearest_node(double t) const {
  const long i = std::lround(t / dt());
  if (i < 0) return 0;
  if (i > intervals_) return intervals_;
  return static_cast<int>(i);
}

namespace {

// Degree-13 Pade coefficients from Higham (2005).
constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0,
                              7771770303897600.0,  1187353796428800.0,
                              129060195264000.0,   10559470521600.0,
                              670442572800.0,      33522128640.0,
                              1323241920.0,        40840800.0,
                              960960.0,            16380.0,
                              182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

}  // namespace

Mat matrix_exponential(const Mat& M, double t) {
  if (M.rows() != M.cols()) throw InvalidArgument("matrix_exponential needs a square matrix");
  if (!M.allFinite() || !std::isfinite(t))
    throw InvalidArgument("matrix_exponential received non-finite input");
  const Eigen::Index n = M.rows();
  Mat A = t * M;
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) return Mat::Identity(n, n);
  int squarings = 0;
  if (norm1 > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    A /= std::ldexp(1.0, squarings);
  }
  const Mat I = Mat::Identity(n, n);
  const Mat A2 = A * A;
  const Mat A4 = A2 * A2;
  const Mat A6 = A4 * A2;
  const auto& b = kPade13;
  const Mat U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
                     b[5] * A4 + b[3] * A2 + b[1] * I);
  const Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                b[4] * A4 + b[2] * A2 + b[0] * I;
  Mat R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) R = R * R;
  return R;
}

DiscreteFlow::DiscreteFlow(LinearDynamics dynamics, TimeGrid grid)
    : dynamics_(std::move(dynamics)), grid_(grid) {
  if (std::abs(grid_.horizon() - dynamics_.horizon()) >
      1e-12 * dynamics_.horizon())
    throw InvalidArgument("time grid horizon does not match the dynamics horizon");
  const int d = dynamics_.state_dim();
  const int k = dynamics_.control_dim();
  Mat block = Mat::Zero(d + k, d + k);
  block.topLeftCorner(d, d) = dynamics_.A();
  block.topRightCorner(d, k) = dynamics_.B();
  // Phi on its own so that A = 0 gives the identity exactly.
  phi_ = matrix_exponential(dynamics_.A(), grid_.dt());
  gamma_ = matrix_exponential(block, grid_.dt()).topRightCorner(d, k);
}

Path integrate_path(const DiscreteFlow& flow, int t0_index, const Vec& x,
                    const Mat& controls) {
  const int N = flow.grid().intervals();
  const int d = flow.dynamics().state_dim();
  const int k = flow.dynamics().control_dim();
  if (t0_index < 0 || t0_index >= N)
    throw InvalidArgument("t0_index must lie in [0, N)");
  if (x.size() != d) throw InvalidArgument("initial state has the wrong dimension");
  const int steps = N - t0_index;
  if (controls.rows() != k || controls.cols() != steps)
    throw InvalidArgument("control sequence must be " + std::to_string(k) + "x" +
                          std::to_string(steps) + ", got " +
                          std::to_string(controls.rows()) + "x" +
                          std::to_string(controls.cols()));
  Path path;
  path.start_node = t0_index;
  path.controls = controls;
  path.states.resize(d, steps + 1);
  path.states.col(0) = x;
  for (int i = 0; i < steps; ++i)
    path.states.col(i + 1) = flow.step(path.states.col(i), controls.col(i));
  return path;
}

TrajectoryEnsemble reference_ensemble(const DiscreteFlow& flow,
                                      const ParticleMeasure& m0) {
  if (m0.dim() != flow.dynamics().state_dim())
    throw InvalidArgument("m0 dimension does not match the dynamics");
  const int N = flow.grid().intervals();
  const Mat zero = Mat::Zero(flow.dynamics().control_dim(), N);
  std::vector<Path> paths;
  paths.reserve(m0.size());
  for (int j = 0; j < m0.size(); ++j)
    paths.push_back(integrate_path(flow, 0, m0.point(j), zero));
  return TrajectoryEnsemble(std::move(paths), m0.weights(), flow.grid());
}

double reference_moment_bound(const LinearDynamics& dynamics,
                              const ParticleMeasure& m0, double alpha) {
  const double a = operator_norm(dynamics.A());
  const double T = dynamics.horizon();
  const double factor = std::max(1.0, std::sqrt(T)) * a * std::exp(T * a);
  return std::pow(factor, alpha) * moment_alpha(m0, alpha);
}

Mat interval_velocities(const LinearDynamics& dynamics, const Path& path) {
  const int steps = path.steps();
  Mat v(dynamics.state_dim(), 2 * steps);
  for (int i = 0; i < steps; ++i) {
    const Vec bu = dynamics.B() * path.controls.col(i);
    v.col(2 * i) = dynamics.A() * path.states.col(i) + bu;
    v.col(2 * i + 1) = dynamics.A() * path.states.col(i + 1) + bu;
  }
  return v;
}

double velocity_l2_norm(const LinearDynamics& dynamics, const Path& path,
                        double dt) {
  const Mat v = interval_velocities(dynamics, path);
  double acc = 0.0;
  for (int i = 0; i < path.steps(); ++i)
    acc += 0.5 * dt * (v.col(2 * i).squaredNorm() + v.col(2 * i + 1).squaredNorm());
  return std::sqrt(acc);
}

double velocity_sup_norm(const LinearDynamics& dynamics, const Path& path) {
  const Mat v = interval_velocities(dynamics, path);
  return v.size() == 0 ? 0.0 : v.colwise().norm().maxCoeff();
}

double control_l2_norm(const Mat& controls, double dt) {
  return std::sqrt(dt * controls.squaredNorm());
}

}  // namespace mfg
