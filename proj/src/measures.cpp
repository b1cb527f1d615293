#include "mfg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace mfg {

namespace {

constexpr double kWeightSumTolerance = 1e-12;

void validate_weights(const Vec& weights, const char* what) {
  if (weights.size() == 0) throw InvalidArgument(std::string(what) + " must be non-empty");
  if (!weights.allFinite() || (weights.array() < 0.0).any())
    throw InvalidArgument(std::string(what) + " weights must be finite and nonnegative");
  if (std::abs(weights.sum() - 1.0) > kWeightSumTolerance)
    throw InvalidArgument(std::string(what) + " weights must sum to 1");
}

// Bit pattern of a point, used for exact grouping.
std::vector<std::uint64_t> bits_of(const Vec& x) {
  std::vector<std::uint64_t> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) std::memcpy(&out[i], &x(i), sizeof(double));
  return out;
}

}  // namespace

ParticleMeasure::ParticleMeasure(Mat points, Vec weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.rows() < 1) throw InvalidArgument("particle dimension must be >= 1");
  if (points_.cols() != weights_.size())
    throw InvalidArgument("particle measure needs one weight per point");
  if (!points_.allFinite()) throw InvalidArgument("particle points must be finite");
  validate_weights(weights_, "particle measure");
}

ParticleMeasure ParticleMeasure::normalized(Mat points, Vec raw_weights) {
  if (raw_weights.size() == 0 || !raw_weights.allFinite() ||
      (raw_weights.array() < 0.0).any())
    throw InvalidArgument("raw weights must be finite and nonnegative");
  const double total = raw_weights.sum();
  if (!(total > 0.0)) throw InvalidArgument("raw weights must have positive total");
  return ParticleMeasure(std::move(points), raw_weights / total);
}

ParticleMeasure ParticleMeasure::dirac(const Vec& x) {
  return ParticleMeasure(Mat(x), Vec::Ones(1));
}

ParticleMeasure ParticleMeasure::compacted() const {
  std::map<std::vector<std::uint64_t>, int> index;
  std::vector<int> order;
  std::vector<double> mass;
  for (int j = 0; j < size(); ++j) {
    auto [it, inserted] = index.try_emplace(bits_of(points_.col(j)), static_cast<int>(order.size()));
    if (inserted) {
      order.push_back(j);
      mass.push_back(weights_(j));
    } else {
      mass[it->second] += weights_(j);
    }
  }
  if (static_cast<int>(order.size()) == size()) return *this;
  Mat pts(dim(), order.size());
  Vec w(order.size());
  for (std::size_t g = 0; g < order.size(); ++g) {
    pts.col(g) = points_.col(order[g]);
    w(g) = mass[g];
  }
  return ParticleMeasure(std::move(pts), std::move(w));
}

TrajectoryEnsemble::TrajectoryEnsemble(std::vector<Path> paths, Vec weights,
                                       TimeGrid grid)
    : paths_(std::move(paths)), weights_(std::move(weights)), grid_(grid) {
  if (static_cast<Eigen::Index>(paths_.size()) != weights_.size())
    throw InvalidArgument("ensemble needs one weight per path");
  validate_weights(weights_, "trajectory ensemble");
  const int N = grid_.intervals();
  for (const auto& p : paths_) {
    if (p.start_node != 0 || p.states.cols() != N + 1 || p.controls.cols() != N)
      throw InvalidArgument("ensemble paths must span the whole grid");
    if (p.states.rows() != paths_.front().states.rows())
      throw InvalidArgument("ensemble paths must share the state dimension");
  }
}

FlowOfMeasures::FlowOfMeasures(std::vector<ParticleMeasure> snapshots, TimeGrid grid)
    : snapshots_(std::move(snapshots)), grid_(grid) {
  if (static_cast<int>(snapshots_.size()) != grid_.nodes())
    throw InvalidArgument("flow needs one snapshot per grid node");
}

FlowOfMeasures FlowOfMeasures::constant(const ParticleMeasure& m, const TimeGrid& grid) {
  return FlowOfMeasures(std::vector<ParticleMeasure>(grid.nodes(), m), grid);
}

ParticleMeasure pushforward_eval(const TrajectoryEnsemble& eta, int node) {
  if (node < 0 || node > eta.grid().intervals())
    throw InvalidArgument("node index out of range");
  const int d = static_cast<int>(eta.path(0).states.rows());
  Mat pts(d, eta.size());
  for (int j = 0; j < eta.size(); ++j) pts.col(j) = eta.path(j).states.col(node);
  return ParticleMeasure(std::move(pts), eta.weights());
}

FlowOfMeasures flow_of(const TrajectoryEnsemble& eta) {
  std::vector<ParticleMeasure> snaps;
  snaps.reserve(eta.grid().nodes());
  for (int i = 0; i < eta.grid().nodes(); ++i) snaps.push_back(pushforward_eval(eta, i));
  return FlowOfMeasures(std::move(snaps), eta.grid());
}

double moment_alpha(const ParticleMeasure& mu, double alpha) {
  if (!(alpha > 1.0)) throw InvalidArgument("moment order alpha must exceed 1");
  double acc = 0.0;
  for (int j = 0; j < mu.size(); ++j)
    acc += mu.weight(j) * std::pow(mu.points().col(j).norm(), alpha);
  return acc;
}

double wasserstein1(const ParticleMeasure& mu, const ParticleMeasure& nu) {
  if (mu.dim() != nu.dim())
    throw InvalidArgument("wasserstein1: dimension mismatch");
  if (mu.dim() == 1) return wasserstein1_sorted(mu, nu);
  return wasserstein1_network(mu.compacted(), nu.compacted());
}

double wasserstein1_sorted(const ParticleMeasure& mu, const ParticleMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1)
    throw InvalidArgument("sorted W1 formula needs one-dimensional measures");
  // Sweep the merged support; between consecutive atoms the CDF difference
  // is constant.
  struct Atom {
    double x;
    double signed_mass;
  };
  std::vector<Atom> atoms;
  atoms.reserve(mu.size() + nu.size());
  for (int j = 0; j < mu.size(); ++j) atoms.push_back({mu.points()(0, j), mu.weight(j)});
  for (int j = 0; j < nu.size(); ++j) atoms.push_back({nu.points()(0, j), -nu.weight(j)});
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  double cdf_gap = 0.0;
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < atoms.size(); ++a) {
    cdf_gap += atoms[a].signed_mass;
    total += std::abs(cdf_gap) * (atoms[a + 1].x - atoms[a].x);
  }
  return total;
}

double flow_distance(const FlowOfMeasures& a, const FlowOfMeasures& b) {
  if (a.grid().nodes() != b.grid().nodes())
    throw InvalidArgument("flow_distance: grids differ");
  double sup = 0.0;
  for (int i = 0; i < a.grid().nodes(); ++i)
    sup = std::max(sup, wasserstein1(a.at(i), b.at(i)));
  return sup;
}

AdmissibilityReport check_admissible(const TrajectoryEnsemble& eta,
                                     const ParticleMeasure& m0,
                                     const LinearDynamics& dynamics, double R,
                                     double alpha) {
  AdmissibilityReport report;
  report.initial_match = wasserstein1(pushforward_eval(eta, 0).compacted(), m0);
  const double dt = eta.grid().dt();
  for (int j = 0; j < eta.size(); ++j)
    report.moment += eta.weight(j) *
                     std::pow(velocity_l2_norm(dynamics, eta.path(j), dt), alpha);
  for (int i = 0; i < eta.grid().nodes(); ++i)
    report.max_marginal_moment =
        std::max(report.max_marginal_moment, moment_alpha(pushforward_eval(eta, i), alpha));
  report.admissible = report.initial_match <= kInitialMatchTolerance && report.moment <= R;
  return report;
}

std::vector<DisintegrationGroup> disintegrate(const TrajectoryEnsemble& eta) {
  std::map<std::vector<std::uint64_t>, std::size_t> index;
  std::vector<DisintegrationGroup> groups;
  for (int j = 0; j < eta.size(); ++j) {
    const Vec start = eta.path(j).initial_state();
    auto [it, inserted] = index.try_emplace(bits_of(start), groups.size());
    if (inserted) {
      DisintegrationGroup g;
      g.start = start;
      groups.push_back(std::move(g));
    }
    auto& g = groups[it->second];
    g.mass += eta.weight(j);
    g.path_indices.push_back(j);
  }
  for (auto& g : groups) {
    g.conditional_weights.resize(g.path_indices.size());
    for (std::size_t q = 0; q < g.path_indices.size(); ++q)
      g.conditional_weights(q) =
          g.mass > 0.0 ? eta.weight(g.path_indices[q]) / g.mass
                       : 1.0 / static_cast<double>(g.path_indices.size());
  }
  return groups;
}

Vec reassemble_weights(const std::vector<DisintegrationGroup>& groups, int path_count) {
  Vec w = Vec::Zero(path_count);
  for (const auto& g : groups)
    for (std::size_t q = 0; q < g.path_indices.size(); ++q)
      w(g.path_indices[q]) = g.mass * g.conditional_weights(q);
  return w;
}

void write_measure_csv(std::ostream& out, const ParticleMeasure& mu) {
  out << "w";
  for (int k = 0; k < mu.dim(); ++k) out << ",x" << (k + 1);
  out << '\n';
  out.precision(17);
  for (int j = 0; j < mu.size(); ++j) {
    out << mu.weight(j);
    for (int k = 0; k < mu.dim(); ++k) out << ',' << mu.points()(k, j);
    out << '\n';
  }
}

ParticleMeasure read_measure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("measure CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "w")
    throw InvalidArgument("measure CSV header must be `w,x1,...,xd`");
  for (std::size_t k = 1; k < header.size(); ++k)
    if (header[k] != "x" + std::to_string(k))
      throw InvalidArgument("measure CSV header column " + std::to_string(k + 1) +
                            " must be x" + std::to_string(k));
  const int d = static_cast<int>(header.size()) - 1;
  std::vector<double> w;
  std::vector<Vec> pts;
  int row = 0;  // data rows, header excluded
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InvalidArgument("measure CSV row " + std::to_string(row) +
                              ": cannot parse '" + cell + "'");
      }
    }
    if (static_cast<int>(vals.size()) != d + 1)
      throw InvalidArgument("measure CSV row " + std::to_string(row) + ": expected " +
                            std::to_string(d + 1) + " columns");
    if (!(vals[0] >= 0.0))
      throw InvalidArgument("measure CSV row " + std::to_string(row) +
                            ": negative weight " + std::to_string(vals[0]));
    w.push_back(vals[0]);
    pts.push_back(Eigen::Map<Vec>(vals.data() + 1, d));
  }
  if (w.empty()) throw InvalidArgument("measure CSV has no particles");
  Mat points(d, pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) points.col(j) = pts[j];
  return ParticleMeasure::normalized(std::move(points), Eigen::Map<Vec>(w.data(), w.size()));
}

void write_flow_csv(std::ostream& out, const FlowOfMeasures& flow) {
  const int d = flow.at(0).dim();
  out << "t,node,w";
  for (int k = 0; k < d; ++k) out << ",x" << (k + 1);
  out << '\n';
  out.precision(17);
  for (int i = 0; i < flow.grid().nodes(); ++i) {
    const auto& m = flow.at(i);
    for (int j = 0; j < m.size(); ++j) {
      out << flow.grid().time(i) << ',' << i << ',' << m.weight(j);
      for (int k = 0; k < d; ++k) out << ',' << m.points()(k, j);
      out << '\n';
    }
  }
}

}  // namespace mfg
