#include "mfg/regularity.hpp"

#include "mfg/parallel.hpp"

#include <cmath>
#include <ostream>
#include <random>

namespace mfg {

HolderFit holder_fit(const FlowOfMeasures& flow) {
  const int n = flow.grid().nodes();
  if (n < 3) throw InvalidArgument("holder_fit needs at least three snapshots");
  std::vector<DistancePair> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      pairs.push_back({i, j, flow.grid().time(j) - flow.grid().time(i), 0.0});
  parallel_for(pairs.size(), [&](std::size_t q) {
    pairs[q].d1 = wasserstein1(flow.at(pairs[q].i), flow.at(pairs[q].j));
  });

  HolderFit fit;
  double scale = 0.0;
  for (const auto& p : pairs) scale = std::max(scale, p.d1);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int used = 0;
  for (const auto& p : pairs) {
    const double ratio = p.d1 / std::sqrt(p.dt);
    if (ratio > fit.constant) {
      fit.constant = ratio;
      fit.worst_pair = p;
    }
    if (p.d1 <= 1e-14 * scale || p.d1 == 0.0) continue;
    const double lx = std::log(p.dt);
    const double ly = std::log(p.d1);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++used;
  }
  if (used >= 2) {
    const double denom = used * sxx - sx * sx;
    if (denom > 0.0) fit.exponent = (used * sxy - sx * sy) / denom;
  }
  if (scale == 0.0) fit.constant = 0.0;
  fit.pairs = std::move(pairs);
  return fit;
}

namespace {

Vec random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec v(d);
  do {
    for (int k = 0; k < d; ++k) v(k) = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

Vec random_in(const Box& box, double margin, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit;
  Vec x(box.dim());
  for (int k = 0; k < box.dim(); ++k) {
    const double lo = box.lo(k) + margin;
    const double hi = box.hi(k) - margin;
    x(k) = lo < hi ? lo + unit(rng) * (hi - lo) : 0.5 * (box.lo(k) + box.hi(k));
  }
  return x;
}

}  // namespace

SemiconcavityReport semiconcavity_probe(ValueSource& value, const Box& region,
                                        const SemiconcavityOptions& options) {
  const TimeGrid& grid = value.grid();
  const int N = grid.intervals();
  const int lo = std::max(0, options.node_lo);
  const int hi = options.node_hi < 0 ? N : std::min(N, options.node_hi);
  if (lo > hi) throw InvalidArgument("semiconcavity node range is empty");
  if (options.h_fractions.empty() || options.delta_steps.empty())
    throw InvalidArgument("semiconcavity needs nonempty h and delta sets");
  const double diam = region.diameter();
  const double dt = grid.dt();
  std::mt19937_64 rng(options.seed);

  SemiconcavityReport report;
  std::vector<ValueQuery> queries;
  for (int p = 0; p < options.probes; ++p) {
    SemiconcavityProbe probe;
    const bool mixed = (p / 2) % 2 == 1;
    probe.training = p % 2 == 0;
    const double frac = options.h_fractions[rng() % options.h_fractions.size()];
    probe.h = frac * diam * random_unit(region.dim(), rng);
    int steps = 0;
    if (mixed) {
      // Pick the largest admissible delta from the set if the range is narrow.
      steps = options.delta_steps[rng() % options.delta_steps.size()];
      while (steps > 0 && 2 * steps > hi - lo) steps /= 2;
    }
    probe.steps = steps;
    std::uniform_int_distribution<int> node(lo + steps, hi - steps);
    probe.node = node(rng);
    probe.x = random_in(region, probe.h.cwiseAbs().maxCoeff(), rng);
    const double delta = steps * dt;
    probe.modulus = probe.h.squaredNorm() +
                    (options.time_modulus == TimeModulus::Fractional ? std::pow(delta, 1.5)
                                                                     : delta * delta);
    queries.push_back({probe.node + steps, probe.x + probe.h});
    queries.push_back({probe.node - steps, probe.x - probe.h});
    queries.push_back({probe.node, probe.x});
    report.probes.push_back(std::move(probe));
  }
  const std::vector<double> v = value.values(queries);

  std::vector<double> slack(report.probes.size());
  for (std::size_t p = 0; p < report.probes.size(); ++p) {
    auto& probe = report.probes[p];
    const double center = v[3 * p + 2];
    probe.second_difference = v[3 * p] + v[3 * p + 1] - 2.0 * center;
    slack[p] = options.noise * (1.0 + std::abs(center));
    const double ratio = probe.second_difference / probe.modulus;
    if (probe.steps == 0)
      report.lambda_space = std::max(report.lambda_space, ratio);
    else
      report.lambda_time = std::max(report.lambda_time, ratio);
    if (probe.training) report.lambda_fit = std::max(report.lambda_fit, ratio);
  }
  for (std::size_t p = 0; p < report.probes.size(); ++p) {
    const auto& probe = report.probes[p];
    if (probe.training) continue;
    if (probe.second_difference > 2.0 * report.lambda_fit * probe.modulus + slack[p])
      report.violations.push_back(static_cast<int>(p));
  }
  return report;
}

LipschitzProbeReport lipschitz_probe(ValueSource& value, const Box& region, int pairs,
                                     std::uint64_t seed, int node_lo, int node_hi) {
  const TimeGrid& grid = value.grid();
  const int N = grid.intervals();
  const int lo = std::max(0, node_lo);
  const int hi = node_hi < 0 ? N : std::min(N, node_hi);
  if (lo >= hi) throw InvalidArgument("lipschitz_probe needs at least two nodes");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(lo, hi);
  std::vector<ValueQuery> queries;
  struct Pair {
    double distance;
    bool space;
  };
  std::vector<Pair> meta;
  for (int p = 0; p < pairs; ++p) {
    if (p % 2 == 0) {
      const int i = node(rng);
      Vec x = random_in(region, 0.0, rng);
      Vec y = random_in(region, 0.0, rng);
      if ((x - y).norm() == 0.0) continue;
      meta.push_back({(x - y).norm(), true});
      queries.push_back({i, std::move(x)});
      queries.push_back({i, std::move(y)});
    } else {
      int i = node(rng);
      int j = node(rng);
      if (i == j) j = i == hi ? i - 1 : i + 1;
      Vec x = random_in(region, 0.0, rng);
      meta.push_back({std::abs(grid.time(i) - grid.time(j)), false});
      queries.push_back({i, x});
      queries.push_back({j, std::move(x)});
    }
  }
  const std::vector<double> v = value.values(queries);
  LipschitzProbeReport report;
  report.pairs = static_cast<int>(meta.size());
  for (std::size_t p = 0; p < meta.size(); ++p) {
    const double q = std::abs(v[2 * p] - v[2 * p + 1]) / meta[p].distance;
    if (meta[p].space)
      report.L_space = std::max(report.L_space, q);
    else
      report.L_time = std::max(report.L_time, q);
  }
  return report;
}

void write_distance_pairs_csv(std::ostream& out, const HolderFit& fit) {
  out << "dt,d1,i,j\n";
  out.precision(17);
  for (const auto& p : fit.pairs) out << p.dt << ',' << p.d1 << ',' << p.i << ',' << p.j << '\n';
}

}  // namespace mfg
