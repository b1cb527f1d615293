#include "mfg/report.hpp"

#include <cmath>
#include <cstdio>

namespace mfg {

namespace {

void emit(const Json& v, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        emit(it.value(), indent, depth + 1, out);
      }
      out += nl;
      out += close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += nl;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) {
          out += ",";
          out += nl;
        }
        out += pad;
        emit(v[i], indent, depth + 1, out);
      }
      out += nl;
      out += close_pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        out += "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      out += buf;
      return;
    }
    default:
      out += v.dump();
  }
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string emit_json(const Json& value, int indent) {
  std::string out;
  emit(value, indent, 0, out);
  out += "\n";
  return out;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json to_json(const AprioriBounds& b) {
  return Json{{"alpha", b.alpha},
              {"radius", b.radius},
              {"c0", b.c0},
              {"c1", b.c1},
              {"c2", b.c2},
              {"c2_space", b.c2_space},
              {"G_sup", b.G_sup},
              {"gradG_sup", b.gradG_sup},
              {"K", b.K},
              {"C1_tilde", b.C1_tilde},
              {"C2_tilde", b.C2_tilde},
              {"C2_binding", b.C2_binding},
              {"m0_moment", b.m0_moment},
              {"m0_first_moment", b.m0_first_moment},
              {"R_star", b.R_star},
              {"kappa", b.kappa},
              {"kappa_binding", b.kappa_binding},
              {"Q1", optional_number(b.Q1)},
              {"L_space", b.L_space}};
}

Json to_json(const AdmissibilityReport& r) {
  return Json{{"initial_match", r.initial_match},
              {"moment", r.moment},
              {"max_marginal_moment", r.max_marginal_moment},
              {"admissible", r.admissible}};
}

Json to_json(const H1Report& r) {
  return Json{{"c3_hat", r.c3_hat},
              {"c4_hat", r.c4_hat},
              {"worst_margin", r.worst_margin},
              {"pass", r.pass},
              {"samples", r.samples}};
}

Json to_json(const EquilibriumReport& r, bool include_paths) {
  Json rounds = Json::array();
  for (const auto& rec : r.rounds)
    rounds.push_back(Json{{"round", rec.round},
                          {"lambda", rec.lambda},
                          {"exploitability", rec.exploitability},
                          {"gap", rec.gap},
                          {"paths", rec.paths},
                          {"admissibility", to_json(rec.admissibility)}});
  Json out{{"converged", r.converged},
           {"stop_reason", r.stop_reason},
           {"rounds_used", static_cast<int>(r.rounds.size())},
           {"rounds", rounds},
           {"final_exploitability", r.final_exploitability},
           {"final_admissibility", to_json(r.final_admissibility)},
           {"R", r.R},
           {"paths", r.ensemble.size()},
           {"exploitability_monotone", r.exploitability_monotone},
           {"bound_ratios",
            Json{{"control", r.worst_control_ratio},
                 {"state", r.worst_state_ratio},
                 {"velocity", r.worst_velocity_ratio}}}};
  out["apriori"] = r.bounds ? to_json(*r.bounds) : Json(nullptr);
  if (r.lipschitz) {
    const auto& c = *r.lipschitz;
    out["lipschitz"] = Json{{"h1", to_json(c.h1)},
                            {"h1_pass", c.h1_pass},
                            {"Q1", optional_number(c.Q1)},
                            {"flow_lipschitz", c.flow_lipschitz},
                            {"max_flow_lipschitz", c.max_flow_lipschitz},
                            {"max_velocity_ratio", c.max_velocity_ratio},
                            {"velocity_ok", c.velocity_ok},
                            {"certified", c.certified}};
  }
  if (include_paths) {
    Json paths = Json::array();
    for (int j = 0; j < r.ensemble.size(); ++j)
      paths.push_back(Json{{"weight", r.ensemble.weight(j)},
                           {"start", to_json(r.ensemble.path(j).initial_state())},
                           {"end", to_json(r.ensemble.path(j).final_state())}});
    out["ensemble"] = paths;
  }
  return out;
}

}  // namespace mfg
