#pragma once

// Boundary behaviour of the five permanent classes: equilibrium sets, edge
// limits and face asymptotics, predicted from the class tables and checked
// by simulating the reduced edge and face systems.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "replicator4/dynamics.hpp"
#include "replicator4/errors.hpp"
#include "replicator4/kernelgeom.hpp"
#include "replicator4/orbit.hpp"
#include "replicator4/payoff.hpp"
#include "replicator4/signgraph.hpp"

namespace replicator4 {

template <class T>
using Matrix3 = std::array<std::array<T, 3>, 3>;

/// Nodes of face F_{-i} in increasing order.
inline std::array<int, 3> face_nodes(int i) {
  std::array<int, 3> out{};
  int k = 0;
  for (int j = 0; j < 4; ++j)
    if (j != i) out[k++] = j;
  return out;
}

/// Principal submatrix of A without row and column i.
template <Scalar T>
Matrix3<T> face_subsystem(const PayoffMatrix<T>& a, int i) {
  if (i < 0 || i > 3) fail(ErrorKind::PreconditionFailed, "face index out of range");
  const auto n = face_nodes(i);
  Matrix3<T> s{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) s[r][c] = a(n[r], n[c]);
  return s;
}

struct EdgeOutcome {
  enum class Kind { AllEquilibria, ConvergeToVertex };
  Kind kind = Kind::AllEquilibria;
  int vertex = -1;
  friend bool operator==(const EdgeOutcome&, const EdgeOutcome&) = default;
};

struct FaceConstraint {
  enum class Kind { None, CoordinatePreserved, IntervalMembership, RatioClaimed };
  Kind kind = Kind::None;
  /// Constrained coordinate (numerator coordinate for RatioClaimed).
  int coordinate = -1;
  /// Denominator coordinate for RatioClaimed.
  int second = -1;
  /// IntervalMembership: z_coordinate ∈ (lower, 1).
  double lower = 0;
  /// `lower` as an exact p/q when the matrix is rational.
  std::string lower_exact;
  /// Bound expression in the caller's labels, e.g. "a14/(a14-a24)".
  std::string expression;
};

struct FaceOutcome {
  enum class Kind { PeriodicOrbits, ConvergeToVertex, ConvergeToEdgePoint };
  Kind kind = Kind::PeriodicOrbits;
  int vertex = -1;
  std::pair<int, int> edge{-1, -1};
  FaceConstraint constraint;
};

struct BoundaryPrediction {
  ClassLabel label;
  /// Edges in the order 12, 13, 14, 23, 24, 34.
  std::array<std::pair<int, int>, 6> edge_keys{};
  std::array<EdgeOutcome, 6> edges{};
  std::array<FaceOutcome, 4> faces{};
  /// Edges made entirely of equilibria (a_ij = 0).
  std::vector<std::pair<int, int>> equilibrium_edges;
  /// Closed segment L ∩ Δ³.
  std::array<Vec<4>, 2> segment{};
  std::vector<int> unstable_vertices;
};

inline std::string describe(const EdgeOutcome& e) {
  if (e.kind == EdgeOutcome::Kind::AllEquilibria) return "AllEquilibria";
  return "ConvergeToVertex(e" + std::to_string(e.vertex + 1) + ")";
}

inline std::string describe(const FaceOutcome& f) {
  switch (f.kind) {
    case FaceOutcome::Kind::PeriodicOrbits: return "PeriodicOrbits";
    case FaceOutcome::Kind::ConvergeToVertex: return "ConvergeToVertex(e" + std::to_string(f.vertex + 1) + ")";
    case FaceOutcome::Kind::ConvergeToEdgePoint: break;
  }
  std::string s = "ConvergeToEdgePoint(E" + std::to_string(f.edge.first + 1) + std::to_string(f.edge.second + 1) + ", ";
  const auto& c = f.constraint;
  switch (c.kind) {
    case FaceConstraint::Kind::CoordinatePreserved: s += "CoordinatePreserved(" + std::to_string(c.coordinate + 1) + ")"; break;
    case FaceConstraint::Kind::IntervalMembership:
      s += "IntervalMembership(z" + std::to_string(c.coordinate + 1) + ", " + c.expression + ")";
      break;
    case FaceConstraint::Kind::RatioClaimed:
      s += "RatioClaimed(" + std::to_string(c.coordinate + 1) + "," + std::to_string(c.second + 1) + ")";
      break;
    case FaceConstraint::Kind::None: s += "None"; break;
  }
  return s + ")";
}

/// On E_ij the flow is x_i' = a_ij x_i x_j, so the strategy with the positive
/// entry takes over.
template <Scalar T>
EdgeOutcome predict_edge(const PayoffMatrix<T>& a, int i, int j, double atol = 1e-12) {
  if (i == j || i < 0 || j < 0 || i > 3 || j > 3) fail(ErrorKind::PreconditionFailed, "edge needs two distinct nodes");
  const int s = sign_of(a(i, j), atol);
  if (s == 0) return {EdgeOutcome::Kind::AllEquilibria, -1};
  return {EdgeOutcome::Kind::ConvergeToVertex, s > 0 ? i : j};
}

namespace detail {

// Face tables in canonical labels (0-based). Bounds are given as index pairs
// (p,q),(r,s) meaning a_pq / (a_pq - a_rs).
struct CanonicalFace {
  FaceOutcome::Kind kind;
  int vertex = -1;
  std::pair<int, int> edge{-1, -1};
  FaceConstraint::Kind constraint = FaceConstraint::Kind::None;
  int coordinate = -1;
  int second = -1;
  std::array<int, 4> bound{-1, -1, -1, -1};
};

inline const std::array<CanonicalFace, 4>& canonical_faces(GraphClass c) {
  using F = FaceOutcome::Kind;
  using C = FaceConstraint::Kind;
  static const std::array<CanonicalFace, 4> kI{{{F::PeriodicOrbits},
                                                {F::PeriodicOrbits},
                                                {F::ConvergeToVertex, 3},
                                                {F::ConvergeToVertex, 0}}};
  static const std::array<CanonicalFace, 4> kII{{{F::PeriodicOrbits},
                                                 {F::PeriodicOrbits},
                                                 {F::ConvergeToVertex, 3},
                                                 {F::ConvergeToEdgePoint, -1, {0, 1}, C::RatioClaimed, 0, 1}}};
  static const std::array<CanonicalFace, 4> kIII{
      {{F::PeriodicOrbits},
       {F::ConvergeToVertex, 3},
       {F::ConvergeToEdgePoint, -1, {0, 1}, C::IntervalMembership, 1, -1, {0, 3, 1, 3}},
       {F::ConvergeToEdgePoint, -1, {0, 1}, C::IntervalMembership, 0, -1, {1, 2, 0, 2}}}};
  static const std::array<CanonicalFace, 4> kIV{{{F::PeriodicOrbits},
                                                 {F::ConvergeToEdgePoint, -1, {0, 3}, C::CoordinatePreserved, 0},
                                                 {F::ConvergeToEdgePoint, -1, {0, 1}, C::CoordinatePreserved, 0},
                                                 {F::ConvergeToEdgePoint, -1, {0, 2}, C::CoordinatePreserved, 0}}};
  static const std::array<CanonicalFace, 4> kV{
      {{F::ConvergeToEdgePoint, -1, {2, 3}, C::IntervalMembership, 2, -1, {3, 1, 2, 1}},
       {F::ConvergeToEdgePoint, -1, {2, 3}, C::IntervalMembership, 3, -1, {2, 0, 3, 0}},
       {F::ConvergeToEdgePoint, -1, {0, 1}, C::IntervalMembership, 1, -1, {0, 3, 1, 3}},
       {F::ConvergeToEdgePoint, -1, {0, 1}, C::IntervalMembership, 0, -1, {1, 2, 0, 2}}}};
  switch (c) {
    case GraphClass::I: return kI;
    case GraphClass::II: return kII;
    case GraphClass::III: return kIII;
    case GraphClass::IV: return kIV;
    case GraphClass::V: return kV;
    default: break;
  }
  fail(ErrorKind::UnknownClass, "no boundary table for class " + std::string(to_string(c)));
}

inline std::vector<int> canonical_unstable_vertices(GraphClass c) {
  switch (c) {
    case GraphClass::I:
    case GraphClass::II:
    case GraphClass::V: return {0, 1, 2, 3};
    case GraphClass::III: return {2, 3};
    case GraphClass::IV: return {1, 2, 3};
    default: break;
  }
  fail(ErrorKind::UnknownClass, "no boundary table for class " + std::string(to_string(c)));
}

inline const Permutation& require_relabeling(const ClassLabel& label) {
  if (!is_permanent_class(label.cls) || !label.relabeling)
    fail(ErrorKind::UnknownClass, "boundary tables need a class I-V label, got " + std::string(to_string(label.cls)));
  return *label.relabeling;
}

inline std::pair<int, int> ordered(int i, int j) { return i < j ? std::pair{i, j} : std::pair{j, i}; }

}  // namespace detail

/// Asymptotics on int F_{-i} from the class table, translated to the
/// caller's labels.
template <Scalar T>
FaceOutcome predict_face(const PayoffMatrix<T>& a, const ClassLabel& label, int i) {
  const Permutation& perm = detail::require_relabeling(label);
  if (i < 0 || i > 3) fail(ErrorKind::PreconditionFailed, "face index out of range");
  const Permutation inv = inverse(perm);
  const detail::CanonicalFace& cf = detail::canonical_faces(label.cls)[perm[i]];
  FaceOutcome out;
  out.kind = cf.kind;
  if (cf.vertex >= 0) out.vertex = inv[cf.vertex];
  if (cf.edge.first >= 0) out.edge = detail::ordered(inv[cf.edge.first], inv[cf.edge.second]);
  out.constraint.kind = cf.constraint;
  if (cf.coordinate >= 0) out.constraint.coordinate = inv[cf.coordinate];
  if (cf.second >= 0) out.constraint.second = inv[cf.second];
  if (cf.constraint == FaceConstraint::Kind::IntervalMembership) {
    const int p = inv[cf.bound[0]], q = inv[cf.bound[1]], r = inv[cf.bound[2]], s = inv[cf.bound[3]];
    const T num = a(p, q);
    const T den = a(p, q) - a(r, s);
    if (den == 0) fail(ErrorKind::InconsistentClass, "degenerate interval bound");
    const T lower = num / den;
    out.constraint.lower = to_double(lower);
    out.constraint.lower_exact = format_scalar(lower);
    const std::string apq = "a" + std::to_string(p + 1) + std::to_string(q + 1);
    const std::string ars = "a" + std::to_string(r + 1) + std::to_string(s + 1);
    out.constraint.expression = apq + "/(" + apq + "-" + ars + ")";
  }
  return out;
}

template <Scalar T>
BoundaryPrediction predict_boundary(const PayoffMatrix<T>& a, const ClassLabel& label) {
  const Permutation& perm = detail::require_relabeling(label);
  BoundaryPrediction p;
  p.label = label;
  int k = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      p.edge_keys[k] = {i, j};
      p.edges[k] = predict_edge(a, i, j);
      if (p.edges[k].kind == EdgeOutcome::Kind::AllEquilibria) p.equilibrium_edges.emplace_back(i, j);
      ++k;
    }
  for (int i = 0; i < 4; ++i) p.faces[i] = predict_face(a, label, i);
  const auto section = kernel_line_section(a, label);
  p.segment = segment_of(section);
  const Permutation inv = inverse(perm);
  for (int c : detail::canonical_unstable_vertices(label.cls)) p.unstable_vertices.push_back(inv[c]);
  std::sort(p.unstable_vertices.begin(), p.unstable_vertices.end());
  return p;
}

// ---------------------------------------------------------------------------
// Verification by simulation

enum class RegionStatus { Pass, Fail, MeasuredOnly };

constexpr std::string_view to_string(RegionStatus s) {
  switch (s) {
    case RegionStatus::Pass: return "pass";
    case RegionStatus::Fail: return "fail";
    case RegionStatus::MeasuredOnly: return "measured-only";
  }
  return "?";
}

struct RegionResult {
  /// "edge:1-2", "face:-3", "equilibria", "vertex:2".
  std::string region;
  std::string prediction;
  RegionStatus status = RegionStatus::Pass;
  int samples = 0;
  std::map<std::string, double> measured;
  /// Limit points (4-D) for the first few samples.
  std::vector<Vec<4>> limits;
  std::string detail;
};

struct BoundaryVerification {
  std::vector<RegionResult> regions;
  bool all_passed() const {
    return std::none_of(regions.begin(), regions.end(), [](const auto& r) { return r.status == RegionStatus::Fail; });
  }
};

struct BoundaryOptions {
  IntegratorOptions integrator{};
  std::uint64_t seed = 20240601;
  double vertex_tol = 1e-4;
  double off_edge_tol = 1e-4;
  double constraint_tol = 1e-3;
  double closure_tol = 1e-6;
  double periodic_horizon = 400;
  /// Early exit once the state moves at most this much over one time unit.
  double stall_tol = 1e-10;
  /// Drift budget factor: budget = factor * rtol * t * max|a_ij|.
  double drift_factor = 100;
  int equilibrium_grid = 20;
  double instability_radius = 0.1;
  double instability_offset = 1e-3;
  std::size_t max_recorded_limits = 4;
};

namespace detail {

template <std::size_t N>
Vec<N> run_to_limit(const Mat<N>& m, const Vec<N>& x0, double t_end, const BoundaryOptions& opts) {
  double t_check = 0;
  Vec<N> x_check = x0;
  auto stop = [&](double t, const Vec<N>& x) {
    if (t < t_check + 1) return false;
    const bool stalled = distance(x, x_check) <= opts.stall_tol;
    t_check = t;
    x_check = x;
    return stalled;
  };
  return integrate<N>(m, x0, t_end, opts.integrator, {}, stop).final_state();
}

template <std::size_t N>
Vec<N> random_interior(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vec<N> x{};
  double s = 0;
  for (auto& c : x) s += (c = g(rng));
  // Keep starts away from the boundary of the chart.
  for (auto& c : x) c = 0.9 * c / s + 0.1 / static_cast<double>(N);
  return x;
}

inline Vec<4> lift_face(int i, const Vec<3>& y) {
  Vec<4> x{};
  const auto n = face_nodes(i);
  for (int r = 0; r < 3; ++r) x[n[r]] = y[r];
  return x;
}

inline Mat<3> face_mat(const PayoffMatrix<double>& a, int i) {
  const auto s = face_subsystem(a, i);
  Mat<3> m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m[r][c] = s[r][c];
  return m;
}

inline void record_max(RegionResult& r, const std::string& key, double v) {
  auto [it, inserted] = r.measured.emplace(key, v);
  if (!inserted) it->second = std::max(it->second, v);
}

inline void record_limit(RegionResult& r, const Vec<4>& x, const BoundaryOptions& opts) {
  if (r.limits.size() < opts.max_recorded_limits) r.limits.push_back(x);
}

inline void fail_region(RegionResult& r, const std::string& why) {
  r.status = RegionStatus::Fail;
  if (r.detail.empty()) r.detail = why;
}

inline double max_abs_entry(const PayoffMatrix<double>& a) { return a.max_abs(); }

}  // namespace detail

inline RegionResult verify_edge(const PayoffMatrix<double>& a, int i, int j, const EdgeOutcome& pred, int samples,
                                double t_end, std::mt19937_64& rng, const BoundaryOptions& opts = {}) {
  RegionResult r;
  r.region = "edge:" + std::to_string(i + 1) + "-" + std::to_string(j + 1);
  r.prediction = describe(pred);
  r.samples = samples;
  const Mat<2> m{{{0.0, a(i, j)}, {a(j, i), 0.0}}};
  for (int s = 0; s < samples; ++s) {
    const Vec<2> y0 = detail::random_interior<2>(rng);
    const Vec<2> y = detail::run_to_limit<2>(m, y0, t_end, opts);
    Vec<4> x{};
    x[i] = y[0];
    x[j] = y[1];
    detail::record_limit(r, x, opts);
    if (pred.kind == EdgeOutcome::Kind::AllEquilibria) {
      const double moved = distance(y, y0);
      detail::record_max(r, "max_displacement", moved);
      if (moved > 1e-12) detail::fail_region(r, "state moved on an equilibrium edge");
    } else {
      const double gap = 1 - x[pred.vertex];
      detail::record_max(r, "max_gap_to_vertex", gap);
      if (gap > opts.vertex_tol) detail::fail_region(r, "limit is not the predicted vertex");
    }
  }
  return r;
}

inline RegionResult verify_face(const PayoffMatrix<double>& a, int i, const FaceOutcome& pred, int samples,
                                double t_end, std::mt19937_64& rng, const BoundaryOptions& opts = {}) {
  RegionResult r;
  r.region = "face:-" + std::to_string(i + 1);
  r.prediction = describe(pred);
  r.samples = samples;
  const Mat<3> m = detail::face_mat(a, i);
  const auto nodes = face_nodes(i);

  if (pred.kind == FaceOutcome::Kind::PeriodicOrbits) {
    // Interior equilibrium of the face: kernel of the 3x3 skew block.
    Vec<3> z{m[1][2], -m[0][2], m[0][1]};
    const double sz = z[0] + z[1] + z[2];
    for (auto& c : z) c /= sz;
    if (!is_interior(z)) {
      detail::fail_region(r, "face carries no interior equilibrium");
      return r;
    }
    OrbitOptions oo;
    oo.integrator = opts.integrator;
    oo.closure_tol = opts.closure_tol;
    for (int s = 0; s < samples; ++s) {
      const Vec<3> y0 = detail::random_interior<3>(rng);
      try {
        const PeriodResult<3> pr = find_period<3>(m, y0, opts.periodic_horizon, oo);
        detail::record_max(r, "max_closure_residual", pr.closure_residual);
        detail::record_max(r, "max_period", pr.period);
        double drift = 0;
        const auto& logs = pr.trajectory.log_states();
        const double p0 = detail::phi_log(z, logs.front());
        for (const auto& u : logs) drift = std::max(drift, std::abs(detail::phi_log(z, u) - p0));
        detail::record_max(r, "max_phi_drift", drift);
        const double budget = opts.drift_factor * opts.integrator.rtol * pr.trajectory.t_end() *
                              std::max(1.0, detail::max_abs_entry(a));
        r.measured["phi_drift_budget"] = budget;
        if (drift > budget) detail::fail_region(r, "face invariant drift exceeds budget");
        detail::record_limit(r, detail::lift_face(i, y0), opts);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoClosureFound && e.kind() != ErrorKind::EquilibriumStart) throw;
        detail::fail_region(r, e.what());
      }
    }
    return r;
  }

  for (int s = 0; s < samples; ++s) {
    const Vec<3> y0 = detail::random_interior<3>(rng);
    const Vec<4> x0 = detail::lift_face(i, y0);
    const Vec<4> x = detail::lift_face(i, detail::run_to_limit<3>(m, y0, t_end, opts));
    detail::record_limit(r, x, opts);
    if (pred.kind == FaceOutcome::Kind::ConvergeToVertex) {
      const double gap = 1 - x[pred.vertex];
      detail::record_max(r, "max_gap_to_vertex", gap);
      if (gap > opts.vertex_tol) detail::fail_region(r, "limit is not the predicted vertex");
      continue;
    }
    const auto [p, q] = pred.edge;
    double off = 0;
    for (int k : nodes)
      if (k != p && k != q) off += x[k];
    detail::record_max(r, "max_off_edge_mass", off);
    if (off > opts.off_edge_tol) detail::fail_region(r, "limit is not on the predicted edge");
    const auto& c = pred.constraint;
    switch (c.kind) {
      case FaceConstraint::Kind::CoordinatePreserved: {
        const double dev = std::abs(x[c.coordinate] - x0[c.coordinate]);
        detail::record_max(r, "max_constraint_deviation", dev);
        if (dev > opts.constraint_tol) detail::fail_region(r, "preserved coordinate changed");
        break;
      }
      case FaceConstraint::Kind::IntervalMembership: {
        // Membership is judged on the edge-normalized limit.
        const double zc = x[c.coordinate] / (x[p] + x[q]);
        const double slack = std::max(0.0, c.lower - zc) + std::max(0.0, zc - 1);
        detail::record_max(r, "max_constraint_violation", slack);
        r.measured["lower_bound"] = c.lower;
        auto [it, inserted] = r.measured.emplace("min_margin_above_lower", zc - c.lower);
        if (!inserted) it->second = std::min(it->second, zc - c.lower);
        if (slack > opts.constraint_tol) detail::fail_region(r, "limit outside the predicted interval");
        break;
      }
      case FaceConstraint::Kind::RatioClaimed: {
        const double claimed = x0[c.coordinate] / x0[c.second];
        const double observed = x[c.coordinate] / x[c.second];
        detail::record_max(r, "max_ratio_deviation", std::abs(observed - claimed));
        detail::record_max(r, "max_relative_ratio_deviation", std::abs(observed - claimed) / claimed);
        if (r.status == RegionStatus::Pass) r.status = RegionStatus::MeasuredOnly;
        break;
      }
      case FaceConstraint::Kind::None: break;
    }
  }
  return r;
}

/// Evaluates ‖f‖ on a barycentric grid and on the predicted equilibrium set:
/// zero on the set, nonzero away from it.
inline RegionResult verify_equilibria(const PayoffMatrix<double>& a, const BoundaryPrediction& pred,
                                      const BoundaryOptions& opts = {}) {
  RegionResult r;
  r.region = "equilibria";
  r.prediction = "vertices + equilibrium edges + L∩Δ³";
  const Mat<4> m = to_mat(a);
  const double scale = std::max(1.0, a.max_abs());
  auto claimed_distance = [&](const Vec<4>& x) {
    double d = distance_to_segment(x, pred.segment);
    for (int v = 0; v < 4; ++v) {
      Vec<4> e{};
      e[v] = 1;
      d = std::min(d, distance(x, e));
    }
    for (auto [i, j] : pred.equilibrium_edges) {
      Vec<4> ei{}, ej{};
      ei[i] = 1;
      ej[j] = 1;
      d = std::min(d, distance_to_segment(Point4<double>(x), Point4<double>(ei), Point4<double>(ej)));
    }
    return d;
  };

  double on_max = 0, off_min = std::numeric_limits<double>::infinity();
  int on_count = 0, off_count = 0;
  auto check_on = [&](const Vec<4>& x) {
    on_max = std::max(on_max, norm2(vector_field(m, x)));
    ++on_count;
  };
  for (int k = 0; k <= 16; ++k) {
    const double c = k / 16.0;
    Vec<4> z{};
    for (int i = 0; i < 4; ++i) z[i] = (1 - c) * pred.segment[0][i] + c * pred.segment[1][i];
    check_on(z);
    for (auto [i, j] : pred.equilibrium_edges) {
      Vec<4> x{};
      x[i] = c;
      x[j] = 1 - c;
      check_on(x);
    }
  }
  const int n = std::max(opts.equilibrium_grid, 2);
  for (int p = 0; p <= n; ++p)
    for (int q = 0; p + q <= n; ++q)
      for (int s = 0; p + q + s <= n; ++s) {
        const Vec<4> x{double(p) / n, double(q) / n, double(s) / n, double(n - p - q - s) / n};
        const double d = claimed_distance(x);
        const double f = norm2(vector_field(m, x));
        if (d <= 1e-12) {
          on_max = std::max(on_max, f);
          ++on_count;
        } else if (d > 1e-6) {
          off_min = std::min(off_min, f);
          ++off_count;
        }
      }
  r.samples = on_count + off_count;
  r.measured["max_field_on_set"] = on_max;
  r.measured["min_field_off_set"] = off_min;
  if (on_max > 1e-12 * scale) detail::fail_region(r, "vector field does not vanish on the predicted set");
  if (!(off_min > 0)) detail::fail_region(r, "extra equilibrium off the predicted set");
  return r;
}

/// For each vertex predicted unstable, starts face trajectories at distance
/// `instability_offset` and looks for one that leaves the ball of radius
/// `instability_radius`.
inline RegionResult verify_unstable_vertex(const PayoffMatrix<double>& a, int v, double t_end,
                                           const BoundaryOptions& opts = {}) {
  RegionResult r;
  r.region = "vertex:" + std::to_string(v + 1);
  r.prediction = "unstable";
  Vec<4> ev{};
  ev[v] = 1;
  double escape = 0;
  for (int i = 0; i < 4 && escape <= opts.instability_radius; ++i) {
    if (i == v) continue;
    const Mat<3> m = detail::face_mat(a, i);
    const auto nodes = face_nodes(i);
    const int vi = static_cast<int>(std::find(nodes.begin(), nodes.end(), v) - nodes.begin());
    for (int w = 0; w < 3 && escape <= opts.instability_radius; ++w) {
      if (w == vi) continue;
      // Mostly towards one neighbour, a little towards the other.
      Vec<3> y{};
      y[vi] = 1 - opts.instability_offset;
      y[w] = 0.9 * opts.instability_offset;
      y[3 - vi - w] = 0.1 * opts.instability_offset;
      const Trajectory<3> tr = integrate<3>(m, y, t_end, opts.integrator, {}, [&](double, const Vec<3>& s) {
        return distance(detail::lift_face(i, s), ev) > opts.instability_radius;
      });
      for (const auto& s : tr.states()) escape = std::max(escape, distance(detail::lift_face(i, s), ev));
      ++r.samples;
    }
  }
  r.measured["max_escape_distance"] = escape;
  if (escape <= opts.instability_radius) detail::fail_region(r, "no nearby trajectory leaves the vertex");
  return r;
}

/// Simulates every edge and face from `samples_per_region` random starts and
/// scores the prediction; also checks the equilibrium set and the vertices
/// predicted unstable. Never throws on a failed prediction; see
/// require_boundary_verified.
inline BoundaryVerification verify_boundary(const PayoffMatrix<double>& a, const BoundaryPrediction& pred,
                                            int samples_per_region, double t_end, const BoundaryOptions& opts = {}) {
  if (samples_per_region < 1 || !(t_end > 0))
    fail(ErrorKind::PreconditionFailed, "need samples_per_region >= 1 and t_end > 0");
  std::mt19937_64 rng(opts.seed);
  BoundaryVerification out;
  for (int k = 0; k < 6; ++k) {
    const auto [i, j] = pred.edge_keys[k];
    out.regions.push_back(verify_edge(a, i, j, pred.edges[k], samples_per_region, t_end, rng, opts));
  }
  for (int i = 0; i < 4; ++i) out.regions.push_back(verify_face(a, i, pred.faces[i], samples_per_region, t_end, rng, opts));
  out.regions.push_back(verify_equilibria(a, pred, opts));
  for (int v : pred.unstable_vertices) out.regions.push_back(verify_unstable_vertex(a, v, t_end, opts));
  return out;
}

inline void require_boundary_verified(const BoundaryVerification& v) {
  for (const auto& r : v.regions)
    if (r.status == RegionStatus::Fail) {
      std::string data;
      for (const auto& [k, x] : r.measured) data += " " + k + "=" + std::to_string(x);
      fail(ErrorKind::PredictionViolated, r.region + " (" + r.prediction + "): " + r.detail + ";" + data);
    }
}

}  // namespace replicator4
