#include "oracles.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

Mat expm_series(const Mat& M, double t) {
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMat X = (M * t).cast<long double>();
  LMat sum = LMat::Identity(M.rows(), M.cols());
  LMat term = sum;
  for (int k = 1; k < 200; ++k) {
    term = term * X / static_cast<long double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-30L) break;
  }
  return sum.cast<double>();
}

namespace {

struct Tableau {
  std::vector<std::vector<double>> a;  // rows x (cols + 1), last column rhs
  std::vector<int> basis;
  int cols = 0;

  void pivot(int r, int c) {
    const double p = a[r][c];
    for (double& v : a[r]) v /= p;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (static_cast<int>(i) == r) continue;
      const double f = a[i][c];
      if (f == 0.0) continue;
      for (int j = 0; j <= cols; ++j) a[i][j] -= f * a[r][j];
    }
    basis[r] = c;
  }

  // Minimizes cost over columns allowed[j]. Dantzig pricing, Bland after
  // a run of degenerate pivots.
  void optimize(const std::vector<double>& cost, const std::vector<bool>& allowed) {
    const double eps = 1e-11;
    int degenerate = 0;
    for (int iter = 0; iter < 100000; ++iter) {
      std::vector<double> reduced(cols);
      for (int j = 0; j < cols; ++j) {
        double z = cost[j];
        for (std::size_t i = 0; i < a.size(); ++i) z -= cost[basis[i]] * a[i][j];
        reduced[j] = z;
      }
      int enter = -1;
      const bool bland = degenerate > 50;
      double best = -eps;
      for (int j = 0; j < cols; ++j) {
        if (!allowed[j] || reduced[j] >= -eps) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (reduced[j] < best) {
          best = reduced[j];
          enter = j;
        }
      }
      if (enter < 0) return;
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i][enter] <= eps) continue;
        const double q = a[i][cols] / a[i][enter];
        if (q < ratio - 1e-14 || (q <= ratio + 1e-14 && leave >= 0 && basis[i] < basis[leave])) {
          ratio = q;
          leave = static_cast<int>(i);
        }
      }
      if (leave < 0) throw std::runtime_error("lp unbounded");
      degenerate = ratio < 1e-14 ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
    throw std::runtime_error("lp iteration limit");
  }
};

}  // namespace

double lp_minimize(const Mat& A, const Vec& b, const Vec& c) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  Tableau t;
  t.cols = n + m;
  t.a.assign(m, std::vector<double>(n + m + 1, 0.0));
  t.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    const double s = b(i) < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) t.a[i][j] = s * A(i, j);
    t.a[i][n + i] = 1.0;
    t.a[i][n + m] = s * b(i);
    t.basis[i] = n + i;
  }
  std::vector<double> phase1(n + m, 0.0);
  for (int i = 0; i < m; ++i) phase1[n + i] = 1.0;
  t.optimize(phase1, std::vector<bool>(n + m, true));
  double infeas = 0.0;
  for (int i = 0; i < m; ++i)
    if (t.basis[i] >= n) infeas += t.a[i][n + m];
  if (infeas > 1e-9) throw std::runtime_error("lp infeasible");
  // Drive artificials out of the basis; rows that cannot pivot are redundant.
  for (int i = 0; i < m; ++i) {
    if (t.basis[i] < n) continue;
    for (int j = 0; j < n; ++j)
      if (std::abs(t.a[i][j]) > 1e-9) {
        t.pivot(i, j);
        break;
      }
  }
  std::vector<double> cost(n + m, 0.0);
  for (int j = 0; j < n; ++j) cost[j] = c(j);
  std::vector<bool> allowed(n + m, false);
  for (int j = 0; j < n; ++j) allowed[j] = true;
  t.optimize(cost, allowed);
  double value = 0.0;
  for (int i = 0; i < m; ++i)
    if (t.basis[i] < n) value += c(t.basis[i]) * t.a[i][n + m];
  return value;
}

double w1_lp(const mfg::ParticleMeasure& mu, const mfg::ParticleMeasure& nu) {
  const int n = mu.size();
  const int k = nu.size();
  Mat A = Mat::Zero(n + k, n * k);
  Vec b(n + k);
  Vec c(n * k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      const int v = i * k + j;
      A(i, v) = 1.0;
      A(n + j, v) = 1.0;
      c(v) = (mu.point(i) - nu.point(j)).norm();
    }
  b << mu.weights(), nu.weights();
  return lp_minimize(A, b, c);
}

mfg::ParticleMeasure random_measure(std::mt19937_64& rng, int dim, int n, double scale) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Mat pts(dim, n);
  Vec w(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < dim; ++k) pts(k, j) = scale * normal(rng);
    w(j) = unit(rng);
  }
  return mfg::ParticleMeasure::normalized(pts, w);
}

double grid_hamiltonian(const mfg::LinearDynamics& dyn, const mfg::LagrangianModel& model,
                        const Vec& x, const Vec& p, const mfg::ParticleMeasure& m,
                        double u_lo, double u_hi, int n) {
  double best = -std::numeric_limits<double>::infinity();
  Vec u(1);
  for (int s = 0; s <= n; ++s) {
    u(0) = u_lo + (u_hi - u_lo) * s / n;
    best = std::max(best, -p.dot(dyn.velocity(x, u)) - model.lagrangian(x, u, m));
  }
  return best;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (int k = 0; k < x.size(); ++k) {
    Vec a = x, b = x;
    a(k) += h;
    b(k) -= h;
    g(k) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

mfg::ParticleMeasure diracs_1d(const std::vector<double>& xs, const std::vector<double>& ws) {
  const int n = static_cast<int>(xs.size());
  Mat pts(1, n);
  Vec w(n);
  for (int j = 0; j < n; ++j) {
    pts(0, j) = xs[j];
    w(j) = ws.empty() ? 1.0 : ws[j];
  }
  return mfg::ParticleMeasure::normalized(pts, w);
}

}  // namespace oracle
