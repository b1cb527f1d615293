#pragma once

#include "mfg/ocp.hpp"

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <vector>

namespace mfg {

struct ValueQuery {
  int node = 0;
  Vec x;
};

/// Anything that evaluates V(t_i, x) on a time grid.
class ValueSource {
 public:
  virtual ~ValueSource() = default;
  virtual const TimeGrid& grid() const = 0;
  virtual double value(int node, const Vec& x) = 0;
  virtual std::vector<double> values(const std::vector<ValueQuery>& queries);
};

struct ValueProbeOptions {
  int multistart = 3;
  std::uint64_t seed = 0;
  OcpOptions ocp;
};

/// Value function of the best-response problem against a frozen flow, with a
/// memo cache keyed by (node, bit pattern of x).
///
/// Each uncached point is solved from up to `multistart` initial controls:
/// zero, u_i = -B^T p_{i+1} from the adjoint of the nearest cached point at
/// the same node, and random draws seeded by (seed, node, x). The lowest cost
/// wins; near ties go to the smaller control norm. A batch only consults
/// cache entries that existed before the batch began, so results do not
/// depend on the thread count.
class ValueProbe final : public ValueSource {
 public:
  ValueProbe(DiscreteFlow flow, const LagrangianModel& model, FlowOfMeasures mflow,
             ValueProbeOptions options = {});

  const TimeGrid& grid() const override { return flow_.grid(); }
  const DiscreteFlow& flow() const { return flow_; }
  const LagrangianModel& model() const { return model_; }
  const FlowOfMeasures& measures() const { return mflow_; }
  const ValueProbeOptions& options() const { return options_; }

  double value(int node, const Vec& x) override;
  std::vector<double> values(const std::vector<ValueQuery>& queries) override;

  /// Best multistart solution at (node, x) for node < N. Not cached.
  OcpSolution solve(int node, const Vec& x) const;

  std::size_t cache_size() const;

 private:
  using Key = std::vector<std::uint64_t>;
  struct Entry {
    Vec x;
    double value = 0.0;
    Mat adjoint;
    std::uint64_t generation = 0;
  };

  static Key key_of(const Vec& x);
  OcpSolution solve_before(int node, const Vec& x, std::uint64_t generation) const;

  DiscreteFlow flow_;
  const LagrangianModel& model_;
  FlowOfMeasures mflow_;
  ValueProbeOptions options_;

  mutable std::shared_mutex mutex_;
  std::vector<std::map<Key, Entry>> cache_;
  std::uint64_t generation_ = 1;
};

/// V(t_i, x).
double value_function(ValueSource& source, int node, const Vec& x);

/// |V(t_i,x) - V(t_j, gamma*(t_j)) - sum_{i<=l<j} dt L| along the solved
/// optimal path from (t_i, x).
double dpp_residual(ValueProbe& probe, int i, int j, const Vec& x);

/// Deterministic 64-bit hash of a seed, a node and the bits of a point.
std::uint64_t point_hash(std::uint64_t seed, int node, const Vec& x);

}  // namespace mfg
