#pragma once

// JSON serialization of reports. Strategy labels are 1-based; exact scalars
// are written as "p/q" strings.

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "replicator4/boundary.hpp"
#include "replicator4/dynamics.hpp"
#include "replicator4/errors.hpp"
#include "replicator4/kernelgeom.hpp"
#include "replicator4/orbit.hpp"
#include "replicator4/signgraph.hpp"

#ifndef REPLICATOR4_VERSION
#define REPLICATOR4_VERSION "1.0.0"
#endif

namespace replicator4 {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "replicator4";
inline constexpr const char* kToolVersion = REPLICATOR4_VERSION;
inline constexpr const char* kSchemaVersion = "1";

template <std::size_t N>
Json vec_json(const Vec<N>& v) {
  Json out = Json::array();
  for (double c : v) out.push_back(c);
  return out;
}

template <Scalar T>
Json exact_point_json(const Point4<T>& p) {
  Json out = Json::array();
  for (const auto& c : p) out.push_back(format_scalar(c));
  return out;
}

inline Json locus_json(const SimplexLocus& l) {
  switch (l.kind) {
    case SimplexLocus::Kind::Interior: return {{"interior", true}};
    case SimplexLocus::Kind::FaceInterior: return {{"face", l.i + 1}};
    case SimplexLocus::Kind::EdgeInterior: return {{"edge", {l.i + 1, l.j + 1}}};
    case SimplexLocus::Kind::Vertex: return {{"vertex", l.i + 1}};
  }
  return nullptr;
}

inline Json digraph_json(const SignDigraph& g, const ClassLabel& label) {
  Json edges = Json::array(), three = Json::array(), four = Json::array();
  for (auto [i, j] : g.edges()) edges.push_back({i + 1, j + 1});
  for (const auto& c : g.three_cycles) three.push_back({c[0] + 1, c[1] + 1, c[2] + 1});
  for (const auto& c : g.four_cycles) four.push_back({c[0] + 1, c[1] + 1, c[2] + 1, c[3] + 1});
  Json out{{"edges", edges}, {"three_cycles", three}, {"four_cycles", four}, {"class", to_string(label.cls)}};
  if (label.relabeling) {
    Json perm = Json::array();
    for (int p : *label.relabeling) perm.push_back(p + 1);
    out["relabeling"] = perm;
  } else {
    out["relabeling"] = nullptr;
  }
  return out;
}

template <Scalar T>
Json classification_json(const ClassificationReport<T>& r) {
  Json out;
  if (r.permanent) out["class"] = to_string(r.label.cls);
  out["permanent"] = r.permanent;
  if (!r.permanent) out["reason"] = r.reason;
  out["pfaffian"] = format_scalar(r.pfaffian);
  out["singular"] = r.singular;
  out["digraph"] = digraph_json(r.graph, r.label);
  return out;
}

template <Scalar T>
Json section_json(const NullLineSection<T>& s) {
  Json eps = Json::array();
  for (const auto& ep : s.endpoints)
    eps.push_back({{"x", exact_point_json(ep.x)},
                   {"x_float", vec_json<4>(Vec<4>(to_double_point(ep.x)))},
                   {"locus", locus_json(ep.locus)}});
  return {{"endpoints", eps}, {"K_nonempty", s.K_nonempty}};
}

inline Json stats_json(const StepStats& s) { return {{"accepted", s.accepted}, {"rejected", s.rejected}}; }

inline Json reference_json(const ReferencePair& p) {
  Json roots = Json::array(), excluded = Json::array();
  for (double c : p.level_roots) roots.push_back(c);
  for (double c : p.excluded) excluded.push_back(c);
  return {{"z_prime", vec_json<4>(p.z_prime)},
          {"z_double_prime", vec_json<4>(p.z_double_prime)},
          {"c_prime", p.c_prime},
          {"c_double_prime", p.c_double_prime},
          {"level_roots", roots},
          {"excluded", excluded},
          {"transversality_margin", p.transversality_margin}};
}

inline Json stability_json(const StabilityProbe& s) {
  Json v = Json::array();
  for (double x : s.V_values) v.push_back(x);
  return {{"delta", s.delta},
          {"probes", s.V_values.size()},
          {"V_values", v},
          {"max_tube_distance", s.max_tube_distance},
          {"V_drift", s.V_drift},
          {"acceptance_multiple", s.acceptance_multiple},
          {"accepted", s.max_tube_distance <= s.acceptance_multiple * s.delta}};
}

inline Json orbit_json(const OrbitReport& r, const ReferencePair& pair) {
  Json out{{"x0", vec_json<4>(r.x0)},
           {"period", r.period},
           {"closure_residual", r.closure_residual},
           {"time_average", vec_json<4>(r.time_average)},
           {"avg_distance_to_K", r.avg_distance_to_K},
           {"phi_drift", {r.drift_phi[0], r.drift_phi[1]}},
           {"transversality_margin", r.transversality_margin},
           {"reference_points", reference_json(pair)}};
  out["stability"] = r.stability ? stability_json(*r.stability) : Json(nullptr);
  return out;
}

inline Json constraint_json(const FaceConstraint& c) {
  switch (c.kind) {
    case FaceConstraint::Kind::None: return nullptr;
    case FaceConstraint::Kind::CoordinatePreserved:
      return {{"kind", "CoordinatePreserved"}, {"coordinate", c.coordinate + 1}};
    case FaceConstraint::Kind::IntervalMembership:
      return {{"kind", "IntervalMembership"},
              {"coordinate", c.coordinate + 1},
              {"lower_expression", c.expression},
              {"lower", c.lower},
              {"lower_exact", c.lower_exact}};
    case FaceConstraint::Kind::RatioClaimed:
      return {{"kind", "RatioClaimed"}, {"numerator", c.coordinate + 1}, {"denominator", c.second + 1}};
  }
  return nullptr;
}

inline Json face_outcome_json(const FaceOutcome& f) {
  Json out;
  switch (f.kind) {
    case FaceOutcome::Kind::PeriodicOrbits: out["kind"] = "PeriodicOrbits"; break;
    case FaceOutcome::Kind::ConvergeToVertex:
      out["kind"] = "ConvergeToVertex";
      out["vertex"] = f.vertex + 1;
      break;
    case FaceOutcome::Kind::ConvergeToEdgePoint:
      out["kind"] = "ConvergeToEdgePoint";
      out["edge"] = {f.edge.first + 1, f.edge.second + 1};
      out["constraint"] = constraint_json(f.constraint);
      break;
  }
  return out;
}

inline Json edge_outcome_json(const EdgeOutcome& e) {
  if (e.kind == EdgeOutcome::Kind::AllEquilibria) return {{"kind", "AllEquilibria"}};
  return {{"kind", "ConvergeToVertex"}, {"vertex", e.vertex + 1}};
}

inline Json prediction_json(const BoundaryPrediction& p) {
  Json edges = Json::object(), faces = Json::object(), eq_edges = Json::array(), unstable = Json::array();
  for (int k = 0; k < 6; ++k) {
    const auto [i, j] = p.edge_keys[k];
    edges["edge:" + std::to_string(i + 1) + "-" + std::to_string(j + 1)] = edge_outcome_json(p.edges[k]);
  }
  for (int i = 0; i < 4; ++i) faces["face:-" + std::to_string(i + 1)] = face_outcome_json(p.faces[i]);
  for (auto [i, j] : p.equilibrium_edges) eq_edges.push_back({i + 1, j + 1});
  for (int v : p.unstable_vertices) unstable.push_back(v + 1);
  return {{"class", to_string(p.label.cls)},
          {"edges", edges},
          {"faces", faces},
          {"equilibria", {{"vertices", {1, 2, 3, 4}}, {"edges", eq_edges},
                          {"segment", {vec_json<4>(p.segment[0]), vec_json<4>(p.segment[1])}}}},
          {"unstable_vertices", unstable}};
}

inline Json verification_json(const BoundaryVerification& v) {
  Json regions = Json::object();
  for (const auto& r : v.regions) {
    Json measured = Json::object();
    for (const auto& [k, x] : r.measured) measured[k] = x;
    Json limits = Json::array();
    for (const auto& x : r.limits) limits.push_back(vec_json<4>(x));
    Json entry{{"prediction", r.prediction},
               {"status", to_string(r.status)},
               {"samples", r.samples},
               {"measured", measured},
               {"limits", limits}};
    if (!r.detail.empty()) entry["detail"] = r.detail;
    regions[r.region] = entry;
  }
  return {{"all_passed", v.all_passed()}, {"regions", regions}};
}

inline Json error_json(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace replicator4
