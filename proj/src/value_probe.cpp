#include "mfg/value_probe.hpp"

#include "mfg/parallel.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <random>

namespace mfg {

std::vector<double> ValueSource::values(const std::vector<ValueQuery>& queries) {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(value(q.node, q.x));
  return out;
}

std::uint64_t point_hash(std::uint64_t seed, int node, const Vec& x) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&seed, sizeof seed);
  const std::int64_t n64 = node;
  mix(&n64, sizeof n64);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double v = x(k) == 0.0 ? 0.0 : x(k);  // fold -0 into +0
    mix(&v, sizeof v);
  }
  return h;
}

ValueProbe::ValueProbe(DiscreteFlow flow, const LagrangianModel& model,
                       FlowOfMeasures mflow, ValueProbeOptions options)
    : flow_(std::move(flow)), model_(model), mflow_(std::move(mflow)),
      options_(options), cache_(flow_.grid().nodes()) {
  require_matching_grid(flow_, mflow_);
  if (options_.multistart < 1) throw InvalidArgument("multistart must be at least 1");
}

ValueProbe::Key ValueProbe::key_of(const Vec& x) {
  Key key(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double v = x(k) == 0.0 ? 0.0 : x(k);
    std::memcpy(&key[k], &v, sizeof v);
  }
  return key;
}

std::size_t ValueProbe::cache_size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& m : cache_) n += m.size();
  return n;
}

OcpSolution ValueProbe::solve(int node, const Vec& x) const {
  std::uint64_t generation;
  {
    std::shared_lock lock(mutex_);
    generation = generation_;
  }
  return solve_before(node, x, generation);
}

OcpSolution ValueProbe::solve_before(int node, const Vec& x,
                                     std::uint64_t generation) const {
  const int N = flow_.grid().intervals();
  if (node < 0 || node >= N) throw InvalidArgument("solve needs a node in [0, N)");
  const int k = flow_.dynamics().control_dim();
  const int steps = N - node;

  std::vector<Mat> starts;
  starts.push_back(Mat::Zero(k, steps));
  {
    std::shared_lock lock(mutex_);
    const Entry* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [key, e] : cache_[node]) {
      if (e.generation >= generation || e.adjoint.cols() != steps + 1) continue;
      const double dist = (e.x - x).norm();
      if (dist < best) {
        best = dist;
        nearest = &e;
      }
    }
    if (nearest && static_cast<int>(starts.size()) < options_.multistart)
      starts.push_back(-flow_.dynamics().B().transpose() * nearest->adjoint.rightCols(steps));
  }
  std::mt19937_64 rng(point_hash(options_.seed, node, x));
  std::normal_distribution<double> normal;
  while (static_cast<int>(starts.size()) < options_.multistart) {
    Mat u(k, steps);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
    starts.push_back(std::move(u));
  }

  return solve_multistart(flow_, model_, mflow_, node, x, starts, options_.ocp);
}

double ValueProbe::value(int node, const Vec& x) { return values({ValueQuery{node, x}}).front(); }

std::vector<double> ValueProbe::values(const std::vector<ValueQuery>& queries) {
  const int N = flow_.grid().intervals();
  std::vector<double> out(queries.size(), 0.0);
  std::vector<std::size_t> pending;
  std::map<std::pair<int, Key>, std::size_t> first_of;
  std::vector<std::size_t> alias(queries.size(), queries.size());
  std::uint64_t generation;
  {
    std::shared_lock lock(mutex_);
    generation = generation_;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto& [node, x] = queries[q];
      if (node < 0 || node > N) throw InvalidArgument("value query node out of range");
      if (x.size() != flow_.dynamics().state_dim())
        throw InvalidArgument("value query point has the wrong dimension");
      if (node == N) {
        out[q] = model_.terminal(x, mflow_.at(N));
        continue;
      }
      Key key = key_of(x);
      auto hit = cache_[node].find(key);
      if (hit != cache_[node].end()) {
        out[q] = hit->second.value;
        continue;
      }
      auto [it, inserted] = first_of.emplace(std::make_pair(node, std::move(key)), q);
      if (inserted)
        pending.push_back(q);
      else
        alias[q] = it->second;
    }
  }

  std::vector<OcpSolution> solved(pending.size());
  parallel_for(pending.size(), [&](std::size_t i) {
    const auto& q = queries[pending[i]];
    solved[i] = solve_before(q.node, q.x, generation);
  });

  {
    std::unique_lock lock(mutex_);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const auto& q = queries[pending[i]];
      out[pending[i]] = solved[i].cost;
      cache_[q.node].emplace(key_of(q.x),
                             Entry{q.x, solved[i].cost, solved[i].adjoint, generation});
    }
    ++generation_;
  }
  for (std::size_t q = 0; q < queries.size(); ++q)
    if (alias[q] < queries.size()) out[q] = out[alias[q]];
  return out;
}

double value_function(ValueSource& source, int node, const Vec& x) {
  return source.value(node, x);
}

double dpp_residual(ValueProbe& probe, int i, int j, const Vec& x) {
  const int N = probe.grid().intervals();
  if (i < 0 || j < i || j > N || i >= N) throw InvalidArgument("dpp_residual needs 0 <= i <= j <= N, i < N");
  if (j == i) return 0.0;
  const OcpSolution sol = probe.solve(i, x);
  const double vi = probe.value(i, x);
  const double dt = probe.grid().dt();
  double running = 0.0;
  for (int l = 0; l < j - i; ++l)
    running += dt * probe.model().lagrangian(sol.path.states.col(l), sol.path.controls.col(l),
                                             probe.measures().at(i + l));
  const double vj = probe.value(j, sol.path.states.col(j - i));
  return std::abs(vi - (vj + running));
}

}  // namespace mfg
