#include "mfg/config.hpp"

#include "mfg/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mfg {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string s = "invalid config:";
  for (const auto& e : errors) s += "\n  " + e;
  return s;
}

// Walks one JSON object, records problems with their key paths and flags
// keys nobody asked for.
class Reader {
 public:
  Reader(const Json* node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (node_ && !node_->is_object()) {
      error("", "expected an object");
      node_ = nullptr;
    }
  }

  ~Reader() {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!seen_.count(it.key())) error(it.key(), "unknown key");
  }

  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  std::string key_path(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void error(const std::string& key, const std::string& what) {
    errors_.push_back(key_path(key) + ": " + what);
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    if (!node_) return nullptr;
    auto it = node_->find(key);
    if (it == node_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  bool has(const std::string& key) {
    return find(key) != nullptr;
  }

  Reader child(const std::string& key) { return Reader(find(key), key_path(key), errors_); }

  double number(const std::string& key, double fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) {
      error(key, "expected a number");
      return fallback;
    }
    const double d = v->get<double>();
    if (!std::isfinite(d)) error(key, "must be finite");
    return d;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!find(key)) return std::nullopt;
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) {
      error(key, "expected an integer");
      return fallback;
    }
    return v->get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      error(key, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) {
      error(key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::optional<Vec> vector(const std::string& key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    return parse_vector(*v, key);
  }

  std::optional<Vec> parse_vector(const Json& v, const std::string& key) {
    if (v.is_number()) return Vec::Constant(1, v.get<double>());
    if (!v.is_array() || v.empty()) {
      error(key, "expected a nonempty array of numbers");
      return std::nullopt;
    }
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        error(key, "entry " + std::to_string(i) + " is not a number");
        return std::nullopt;
      }
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    if (!out.allFinite()) {
      error(key, "entries must be finite");
      return std::nullopt;
    }
    return out;
  }

  // Row-major nested arrays; a bare number is a 1x1 matrix.
  std::optional<Mat> matrix(const std::string& key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    if (v->is_number()) return Mat::Constant(1, 1, v->get<double>());
    if (!v->is_array() || v->empty()) {
      error(key, "expected a nonempty array of rows");
      return std::nullopt;
    }
    const std::size_t rows = v->size();
    std::size_t cols = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      const Json& row = (*v)[r];
      if (!row.is_array() || row.empty()) {
        error(key, "row " + std::to_string(r) + " is not a nonempty array");
        return std::nullopt;
      }
      if (r == 0) cols = row.size();
      if (row.size() != cols) {
        error(key, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                       " entries, expected " + std::to_string(cols));
        return std::nullopt;
      }
    }
    Mat out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const Json& e = (*v)[r][c];
        if (!e.is_number()) {
          error(key, "entry (" + std::to_string(r) + "," + std::to_string(c) + ") is not a number");
          return std::nullopt;
        }
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = e.get<double>();
      }
    if (!out.allFinite()) {
      error(key, "entries must be finite");
      return std::nullopt;
    }
    return out;
  }

  const Json* node() const { return node_; }
  std::vector<std::string>& errors() { return errors_; }

 private:
  const Json* node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void parse_m0(Reader& root, RunConfig& cfg, const std::filesystem::path& base_dir) {
  Reader r = root.child("m0");
  if (!r.node()) {
    root.error("m0", "required");
    return;
  }
  const Json* particles = r.find("particles");
  const bool has_csv = r.has("csv");
  if (particles && has_csv) {
    r.error("", "give either particles or csv, not both");
    return;
  }
  if (has_csv) {
    const std::filesystem::path file = base_dir / r.string("csv", "");
    std::ifstream in(file);
    if (!in) {
      r.error("csv", "cannot open '" + file.string() + "'");
      return;
    }
    try {
      cfg.m0 = read_measure_csv(in);
    } catch (const std::exception& e) {
      r.error("csv", e.what());
    }
    return;
  }
  if (!particles || !particles->is_array() || particles->empty()) {
    r.error("particles", "expected a nonempty array of {w, x}");
    return;
  }
  std::vector<double> w;
  std::vector<Vec> x;
  for (std::size_t j = 0; j < particles->size(); ++j) {
    Reader p(&(*particles)[j], r.key_path("particles") + "[" + std::to_string(j) + "]", r.errors());
    const double wj = p.number("w", 1.0);
    if (!(wj >= 0.0)) p.error("w", "weight must be nonnegative");
    auto xj = p.vector("x");
    if (!xj) {
      if (!p.has("x")) p.error("x", "required");
      continue;
    }
    if (!x.empty() && xj->size() != x.front().size()) {
      p.error("x", "dimension differs from particle 0");
      continue;
    }
    w.push_back(wj);
    x.push_back(*xj);
  }
  if (x.size() != particles->size()) return;
  Mat pts(x.front().size(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) pts.col(static_cast<Eigen::Index>(j)) = x[j];
  Vec wv = Eigen::Map<Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
  try {
    cfg.m0 = ParticleMeasure::normalized(pts, wv);
  } catch (const std::exception& e) {
    r.error("particles", e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

Box RunConfig::region() const {
  if (diagnostics.region) return *diagnostics.region;
  Vec lo = m0.points().rowwise().minCoeff().array() - 1.0;
  Vec hi = m0.points().rowwise().maxCoeff().array() + 1.0;
  return Box{lo, hi};
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError({std::string("<root>: malformed JSON: ") + e.what()});
  }
  std::vector<std::string> errors;
  RunConfig cfg;
  {
    Reader root(&doc, "", errors);

    {
      Reader dyn = root.child("dynamics");
      if (!dyn.node()) root.error("dynamics", "required");
      auto A = dyn.matrix("A");
      auto B = dyn.matrix("B");
      cfg.T = dyn.number("T", 1.0);
      if (dyn.node() && !A) { if (!dyn.has("A")) dyn.error("A", "required"); }
      if (dyn.node() && !B) { if (!dyn.has("B")) dyn.error("B", "required"); }
      if (!(cfg.T > 0.0)) dyn.error("T", "horizon must be positive");
      if (A && A->rows() != A->cols())
        dyn.error("A", "must be square, got " + std::to_string(A->rows()) + "x" +
                           std::to_string(A->cols()));
      if (A && B && B->rows() != A->rows())
        dyn.error("B", "must have " + std::to_string(A->rows()) + " rows to match A, got " +
                           std::to_string(B->rows()));
      if (A) cfg.A = *A;
      if (B) cfg.B = *B;
    }
    {
      Reader grid = root.child("grid");
      cfg.N = static_cast<int>(grid.integer("N", 100));
      if (cfg.N < 2) grid.error("N", "need at least 2 intervals");
    }
    {
      Reader model = root.child("model");
      {
        Reader running = model.child("running");
        cfg.model.q = running.number("q", 0.0);
        cfg.model.beta = running.number("beta", 0.0);
        if (cfg.model.beta < 0.0) running.error("beta", "must be nonnegative");
      }
      {
        Reader coupling = model.child("coupling");
        const std::string type = coupling.string("type", "none");
        try {
          cfg.model.coupling = parse_coupling_kind(type);
        } catch (const std::exception& e) {
          coupling.error("type", "expected none, mean or convolution, got '" + type + "'");
        }
        cfg.model.theta = coupling.number("theta", 0.0);
        cfg.model.amplitude = coupling.number("amplitude", 0.0);
        cfg.model.width = coupling.number("width", 1.0);
        if (!(cfg.model.width > 0.0)) coupling.error("width", "must be positive");
      }
      {
        Reader terminal = model.child("terminal");
        cfg.model.terminal_g = terminal.number("g", 0.0);
        cfg.model.terminal_theta = terminal.number("theta", 0.0);
      }
    }
    parse_m0(root, cfg, base_dir);
    cfg.alpha = root.number("alpha", 2.0);
    if (!(cfg.alpha > 1.0)) root.error("alpha", "must exceed 1");
    cfg.R = root.optional_number("R");
    if (cfg.R && *cfg.R < 0.0) root.error("R", "must be nonnegative");
    {
      Reader eq = root.child("equilibrium");
      auto& e = cfg.equilibrium;
      e.max_rounds = static_cast<int>(eq.integer("max_rounds", 50));
      if (e.max_rounds < 1) eq.error("max_rounds", "must be at least 1");
      const std::string avg = eq.string("averaging", "harmonic");
      if (avg == "harmonic")
        e.averaging = Averaging::Harmonic;
      else if (avg == "constant")
        e.averaging = Averaging::Constant;
      else
        eq.error("averaging", "expected harmonic or constant, got '" + avg + "'");
      e.lambda = eq.number("lambda", 0.5);
      if (!(e.lambda > 0.0 && e.lambda <= 1.0)) eq.error("lambda", "must lie in (0, 1]");
      e.tol_gap = eq.number("tol_gap", 1e-6);
      if (!(e.tol_gap > 0.0)) eq.error("tol_gap", "must be positive");
      e.tol_exploitability = eq.number("tol_exploitability", 1e-4);
      if (!(e.tol_exploitability > 0.0)) eq.error("tol_exploitability", "must be positive");
      e.lipschitz = eq.boolean("lipschitz", false);
      e.c3 = eq.optional_number("c3");
      e.c4 = eq.optional_number("c4");
    }
    {
      Reader ocp = root.child("ocp");
      cfg.ocp.x = ocp.vector("x");
      cfg.ocp.t0_index = static_cast<int>(ocp.integer("t0_index", 0));
      if (cfg.ocp.t0_index < 0 || cfg.ocp.t0_index >= cfg.N)
        ocp.error("t0_index", "must lie in [0, N)");
      cfg.ocp.multistart = static_cast<int>(ocp.integer("multistart", 3));
      if (cfg.ocp.multistart < 1) ocp.error("multistart", "must be at least 1");
      cfg.ocp.options.tol_grad = ocp.number("tol_grad", 1e-8);
      if (!(cfg.ocp.options.tol_grad > 0.0)) ocp.error("tol_grad", "must be positive");
      cfg.ocp.options.max_iter = static_cast<int>(ocp.integer("max_iter", 1000));
      if (cfg.ocp.options.max_iter < 1) ocp.error("max_iter", "must be at least 1");
    }
    {
      Reader diag = root.child("diagnostics");
      auto& d = cfg.diagnostics;
      {
        Reader region = diag.child("region");
        if (region.node()) {
          auto lo = region.vector("lo");
          auto hi = region.vector("hi");
          if (!lo && !region.has("lo")) region.error("lo", "required");
          if (!hi && !region.has("hi")) region.error("hi", "required");
          if (lo && hi) {
            if (lo->size() != hi->size())
              region.error("hi", "dimension differs from lo");
            else if (!((hi->array() > lo->array()).all()))
              region.error("hi", "must exceed lo in every coordinate");
            else
              d.region = Box{*lo, *hi};
          }
        }
      }
      auto positive_int = [&diag](const std::string& key, int fallback) {
        const int v = static_cast<int>(diag.integer(key, fallback));
        if (v < 1) diag.error(key, "must be at least 1");
        return v;
      };
      d.probe_grid = positive_int("probe_grid", 11);
      d.n_tests = positive_int("n_tests", 20);
      d.semiconcavity_probes = positive_int("semiconcavity_probes", 500);
      d.hjb_samples = positive_int("hjb_samples", 200);
      d.lipschitz_pairs = positive_int("lipschitz_pairs", 200);
      d.runs = positive_int("runs", 3);
      if (d.runs < 2) diag.error("runs", "need at least 2 runs");
      d.tol_pde = diag.number("tol_pde", 1e-2);
      d.tol_hjb = diag.number("tol_hjb", 1e-3);
      d.hjb_fraction = diag.number("hjb_fraction", 0.8);
      d.tol_synthesis = diag.number("tol_synthesis", 5e-2);
      d.tol_unique = diag.number("tol_unique", 5e-3);
    }
    cfg.output = root.string("output", "runs");
    const long long seed = root.integer("seed", 0);
    if (seed < 0) root.error("seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    const long long threads = root.integer("threads", 0);
    if (threads < 0) root.error("threads", "must be nonnegative");
    cfg.threads = static_cast<unsigned>(threads);
  }

  if (errors.empty()) {
    const int d = static_cast<int>(cfg.A.rows());
    if (cfg.m0.dim() != d)
      errors.push_back("m0: particle dimension " + std::to_string(cfg.m0.dim()) +
                       " does not match A (" + std::to_string(d) + ")");
    if (cfg.ocp.x && cfg.ocp.x->size() != d) errors.push_back("ocp.x: dimension must be " + std::to_string(d));
    if (cfg.diagnostics.region && cfg.diagnostics.region->dim() != d)
      errors.push_back("diagnostics.region: dimension must be " + std::to_string(d));
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));

  cfg.equilibrium.alpha = cfg.alpha;
  cfg.equilibrium.R = cfg.R;
  cfg.equilibrium.ocp = cfg.ocp.options;
  cfg.equilibrium.seed = cfg.seed;
  rehash(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string canonical_config(const RunConfig& cfg) {
  Json m0 = Json::array();
  for (int j = 0; j < cfg.m0.size(); ++j)
    m0.push_back(Json{{"w", cfg.m0.weight(j)}, {"x", to_json(cfg.m0.point(j))}});
  const auto& e = cfg.equilibrium;
  const auto& d = cfg.diagnostics;
  const Box region = cfg.region();
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json doc{
      {"dynamics", {{"A", to_json(cfg.A)}, {"B", to_json(cfg.B)}, {"T", cfg.T}}},
      {"grid", {{"N", cfg.N}}},
      {"model",
       {{"running", {{"q", cfg.model.q}, {"beta", cfg.model.beta}}},
        {"coupling",
         {{"type", coupling_kind_name(cfg.model.coupling)},
          {"theta", cfg.model.theta},
          {"amplitude", cfg.model.amplitude},
          {"width", cfg.model.width}}},
        {"terminal", {{"g", cfg.model.terminal_g}, {"theta", cfg.model.terminal_theta}}}}},
      {"m0", {{"particles", m0}}},
      {"alpha", cfg.alpha},
      {"R", opt(cfg.R)},
      {"equilibrium",
       {{"max_rounds", e.max_rounds},
        {"averaging", e.averaging == Averaging::Harmonic ? "harmonic" : "constant"},
        {"lambda", e.lambda},
        {"tol_gap", e.tol_gap},
        {"tol_exploitability", e.tol_exploitability},
        {"lipschitz", e.lipschitz},
        {"c3", opt(e.c3)},
        {"c4", opt(e.c4)}}},
      {"ocp",
       {{"x", cfg.ocp.x ? to_json(*cfg.ocp.x) : Json(nullptr)},
        {"t0_index", cfg.ocp.t0_index},
        {"multistart", cfg.ocp.multistart},
        {"tol_grad", cfg.ocp.options.tol_grad},
        {"max_iter", cfg.ocp.options.max_iter}}},
      {"diagnostics",
       {{"region", {{"lo", to_json(region.lo)}, {"hi", to_json(region.hi)}}},
        {"probe_grid", d.probe_grid},
        {"n_tests", d.n_tests},
        {"semiconcavity_probes", d.semiconcavity_probes},
        {"hjb_samples", d.hjb_samples},
        {"lipschitz_pairs", d.lipschitz_pairs},
        {"runs", d.runs},
        {"tol_pde", d.tol_pde},
        {"tol_hjb", d.tol_hjb},
        {"hjb_fraction", d.hjb_fraction},
        {"tol_synthesis", d.tol_synthesis},
        {"tol_unique", d.tol_unique}}},
      {"seed", cfg.seed}};
  return emit_json(doc, 0);
}

void rehash(RunConfig& cfg) {
  cfg.equilibrium.seed = cfg.seed;
  cfg.hash = fnv1a_hex(canonical_config(cfg));
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfg
