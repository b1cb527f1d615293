#pragma once

#include "mfg/hamiltonian.hpp"
#include "mfg/measures.hpp"
#include "mfg/value_probe.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace mfg {

struct DistancePair {
  int i = 0;
  int j = 0;
  double dt = 0.0;  ///< |t_j - t_i|
  double d1 = 0.0;
};

struct HolderFit {
  /// Log-log slope of d1 against |t - s|; +infinity when every distance is 0.
  double exponent = std::numeric_limits<double>::infinity();
  /// max d1(m_t, m_s) / |t - s|^{1/2}.
  double constant = 0.0;
  DistancePair worst_pair;
  std::vector<DistancePair> pairs;
};

/// d1 over all node pairs of the flow.
HolderFit holder_fit(const FlowOfMeasures& flow);

enum class TimeModulus { Fractional, Quadratic };

struct SemiconcavityOptions {
  int probes = 500;
  int node_lo = 0;   ///< probes use nodes in [node_lo, node_hi]
  int node_hi = -1;  ///< -1 selects N
  std::vector<double> h_fractions{0.02, 0.05, 0.1};  ///< times diam(region)
  std::vector<int> delta_steps{1, 2, 4};             ///< times dt
  TimeModulus time_modulus = TimeModulus::Fractional;
  double noise = 1e-6;  ///< absolute slack, scaled by 1 + |V(t,x)|
  std::uint64_t seed = 0;
};

struct SemiconcavityProbe {
  int node = 0;
  int steps = 0;  ///< delta / dt, 0 for pure-space probes
  Vec x;
  Vec h;
  double second_difference = 0.0;
  double modulus = 0.0;
  bool training = false;
};

struct SemiconcavityReport {
  double lambda_space = 0.0;  ///< max over pure-space probes of D2 / |h|^2
  double lambda_time = 0.0;   ///< max over mixed probes of D2 / (|h|^2 + modulus(delta))
  double lambda_fit = 0.0;    ///< fitted on the training half
  std::vector<SemiconcavityProbe> probes;
  std::vector<int> violations;  ///< held-out probes with D2 > 2 lambda_fit modulus + noise
};

/// Second differences
///   V(t+delta, x+h) + V(t-delta, x-h) - 2 V(t, x)
/// at random probes inside [0,T] x region; half are pure-space (delta = 0).
SemiconcavityReport semiconcavity_probe(ValueSource& value, const Box& region,
                                        const SemiconcavityOptions& options = {});

struct LipschitzProbeReport {
  double L_space = 0.0;
  double L_time = 0.0;
  int pairs = 0;
};

/// Max difference quotients of V over sampled pairs: same node with points
/// in the region, and same point at two nodes in [node_lo, node_hi].
LipschitzProbeReport lipschitz_probe(ValueSource& value, const Box& region, int pairs = 200,
                                     std::uint64_t seed = 0, int node_lo = 0, int node_hi = -1);

/// Writes `dt,d1,i,j` rows for plotting.
void write_distance_pairs_csv(std::ostream& out, const HolderFit& fit);

}  // namespace mfg
