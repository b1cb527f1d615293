#pragma once

#include "mfg/equilibrium.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/measures.hpp"
#include "mfg/models.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfg {

/// Every validation problem found in a config, each prefixed by its key path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OcpRunConfig {
  std::optional<Vec> x;  ///< defaults to the first particle of m0
  int t0_index = 0;
  int multistart = 3;
  OcpOptions options;
};

struct DiagnosticsConfig {
  std::optional<Box> region;  ///< defaults to the bounding box of m0, padded by 1
  int probe_grid = 11;
  int n_tests = 20;
  int semiconcavity_probes = 500;
  int hjb_samples = 200;
  int lipschitz_pairs = 200;
  int runs = 3;
  double tol_pde = 1e-2;
  double tol_hjb = 1e-3;
  double hjb_fraction = 0.8;
  double tol_synthesis = 5e-2;
  double tol_unique = 5e-3;
};

struct RunConfig {
  Mat A;
  Mat B;
  double T = 1.0;
  int N = 100;
  ModelSpec model;
  ParticleMeasure m0 = ParticleMeasure::dirac(Vec::Zero(1));
  double alpha = 2.0;
  std::optional<double> R;
  EquilibriumConfig equilibrium;
  OcpRunConfig ocp;
  DiagnosticsConfig diagnostics;
  std::string output = "runs";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  /// FNV-1a hash of the canonical config text (output and threads excluded).
  std::string hash;

  LinearDynamics dynamics() const { return LinearDynamics(A, B, T); }
  TimeGrid grid() const { return TimeGrid(T, N); }
  Box region() const;
};

/// Parses a JSON document. Relative CSV paths resolve against base_dir.
RunConfig parse_config(const std::string& text,
                       const std::filesystem::path& base_dir = std::filesystem::path("."));

RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the effective configuration (defaults filled in,
/// output and threads left out).
std::string canonical_config(const RunConfig& cfg);

/// Recomputes the hash after command-line overrides.
void rehash(RunConfig& cfg);

std::string fnv1a_hex(const std::string& text);

}  // namespace mfg
