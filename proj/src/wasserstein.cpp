#include "mfg/measures.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace mfg {

// Successive shortest augmenting paths with Johnson potentials on the
// complete bipartite transport graph
//   S -> source i (capacity a_i) -> sink j (cost |x_i - y_j|) -> T (capacity b_j).
// Node layout: 0 = S, 1..n sources, n+1..n+m sinks, n+m+1 = T.
double wasserstein1_network(const ParticleMeasure& mu, const ParticleMeasure& nu) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("wasserstein1: dimension mismatch");
  const int n = mu.size();
  const int m = nu.size();
  if (n > kMaxTransportParticles || m > kMaxTransportParticles)
    throw InvalidArgument("wasserstein1: exact backend supports at most " +
                          std::to_string(kMaxTransportParticles) +
                          " particles per measure");
  Mat cost(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost(i, j) = (mu.points().col(i) - nu.points().col(j)).norm();

  std::vector<double> supply(mu.weights().data(), mu.weights().data() + n);
  std::vector<double> demand(nu.weights().data(), nu.weights().data() + m);
  Mat flow = Mat::Zero(n, m);

  const int V = n + m + 2;
  const int S = 0;
  const int T = n + m + 1;
  auto source = [](int i) { return 1 + i; };
  auto sink = [n](int j) { return 1 + n + j; };
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> potential(V, 0.0);
  std::vector<double> dist(V);
  std::vector<int> prev(V);
  std::vector<char> done(V);

  double remaining = 0.0;
  for (double a : supply) remaining += a;

  for (int iter = 0; remaining > 1e-15; ++iter) {
    if (iter > 50 * (n + m) + 1000)
      throw NumericalFailure("wasserstein1: augmenting-path iteration limit reached");
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    dist[S] = 0.0;
    for (;;) {
      int u = -1;
      for (int v = 0; v < V; ++v)
        if (!done[v] && dist[v] < kInf && (u < 0 || dist[v] < dist[u])) u = v;
      if (u < 0) break;
      done[u] = 1;
      auto relax = [&](int v, double c) {
        const double reduced = std::max(0.0, c + potential[u] - potential[v]);
        if (dist[u] + reduced < dist[v]) {
          dist[v] = dist[u] + reduced;
          prev[v] = u;
        }
      };
      if (u == S) {
        for (int i = 0; i < n; ++i)
          if (supply[i] > 0.0) relax(source(i), 0.0);
      } else if (u <= n) {
        const int i = u - 1;
        for (int j = 0; j < m; ++j) relax(sink(j), cost(i, j));
      } else if (u < T) {
        const int j = u - 1 - n;
        if (demand[j] > 0.0) relax(T, 0.0);
        for (int i = 0; i < n; ++i)
          if (flow(i, j) > 0.0) relax(source(i), -cost(i, j));
      }
    }
    if (dist[T] == kInf) break;
    for (int v = 0; v < V; ++v)
      if (dist[v] < kInf) potential[v] += dist[v];

    // Bottleneck along T <- ... <- S.
    double push = kInf;
    for (int v = T; v != S; v = prev[v]) {
      const int u = prev[v];
      if (u == S) {
        push = std::min(push, supply[v - 1]);
      } else if (v == T) {
        push = std::min(push, demand[u - 1 - n]);
      } else if (u > n) {  // sink -> source: cancel flow
        push = std::min(push, flow(v - 1, u - 1 - n));
      }
    }
    for (int v = T; v != S; v = prev[v]) {
      const int u = prev[v];
      if (u == S) {
        supply[v - 1] -= push;
        if (supply[v - 1] < 0.0) supply[v - 1] = 0.0;
      } else if (v == T) {
        demand[u - 1 - n] -= push;
        if (demand[u - 1 - n] < 0.0) demand[u - 1 - n] = 0.0;
      } else if (u <= n) {
        flow(u - 1, v - 1 - n) += push;
      } else {
        double& f = flow(v - 1, u - 1 - n);
        f -= push;
        if (f < 0.0) f = 0.0;
      }
    }
    remaining -= push;
  }
  return (flow.array() * cost.array()).sum();
}

}  // namespace mfg
