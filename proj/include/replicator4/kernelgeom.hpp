#pragma once

// Geometry of the interior equilibria: null(A), the line L = null(A) ∩ {1ᵀx = 1},
// its section across the simplex, and the open equilibrium segment K.

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "replicator4/errors.hpp"
#include "replicator4/payoff.hpp"
#include "replicator4/signgraph.hpp"

namespace replicator4 {

template <class T>
using Point4 = std::array<T, 4>;

template <Scalar T>
Point4<double> to_double_point(const Point4<T>& p) {
  Point4<double> out{};
  for (int i = 0; i < 4; ++i) out[i] = to_double(p[i]);
  return out;
}

template <Scalar T>
Point4<T> apply(const PayoffMatrix<T>& a, const Point4<T>& x) {
  Point4<T> y{};
  for (int i = 0; i < 4; ++i) {
    T s = T(0);
    for (int j = 0; j < 4; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

template <Scalar T>
double residual_inf(const PayoffMatrix<T>& a, const Point4<T>& x) {
  double r = 0;
  for (const T& v : apply(a, x)) r = std::max(r, std::abs(to_double(v)));
  return r;
}

// ---------------------------------------------------------------------------
// Loci on the simplex

struct SimplexLocus {
  enum class Kind { Interior, FaceInterior, EdgeInterior, Vertex };
  Kind kind = Kind::Interior;
  /// FaceInterior: the vanishing coordinate. EdgeInterior: the support {i, j},
  /// i < j. Vertex: the vertex index.
  int i = -1;
  int j = -1;

  static SimplexLocus interior() { return {}; }
  static SimplexLocus face(int i) { return {Kind::FaceInterior, i, -1}; }
  static SimplexLocus edge(int i, int j) { return {Kind::EdgeInterior, std::min(i, j), std::max(i, j)}; }
  static SimplexLocus vertex(int i) { return {Kind::Vertex, i, -1}; }

  friend bool operator==(const SimplexLocus&, const SimplexLocus&) = default;
};

inline std::string describe(const SimplexLocus& l) {
  switch (l.kind) {
    case SimplexLocus::Kind::Interior: return "interior";
    case SimplexLocus::Kind::FaceInterior: return "int F_-" + std::to_string(l.i + 1);
    case SimplexLocus::Kind::EdgeInterior: return "int E_" + std::to_string(l.i + 1) + std::to_string(l.j + 1);
    case SimplexLocus::Kind::Vertex: return "e_" + std::to_string(l.i + 1);
  }
  return "?";
}

/// Classifies a point of the simplex by its vanishing coordinates; doubles
/// below `zero_tol` count as zero.
template <Scalar T>
SimplexLocus locus_of(const Point4<T>& x, double zero_tol = 1e-9) {
  std::vector<int> support;
  for (int i = 0; i < 4; ++i)
    if (!is_zero(x[i], zero_tol)) support.push_back(i);
  switch (support.size()) {
    case 4: return SimplexLocus::interior();
    case 3: {
      for (int i = 0; i < 4; ++i)
        if (std::find(support.begin(), support.end(), i) == support.end()) return SimplexLocus::face(i);
      break;
    }
    case 2: return SimplexLocus::edge(support[0], support[1]);
    case 1: return SimplexLocus::vertex(support[0]);
    default: break;
  }
  fail(ErrorKind::DomainError, "point is not on the simplex");
}

// ---------------------------------------------------------------------------
// Null space

template <Scalar T>
struct KernelBasis {
  Point4<T> u{};
  Point4<T> v{};
};

namespace detail {

inline KernelBasis<Rational> exact_kernel(const PayoffMatrix<Rational>& a) {
  Matrix4<Rational> m = a.entries();
  std::array<int, 4> pivot_col{-1, -1, -1, -1};
  int rank = 0;
  for (int col = 0; col < 4 && rank < 4; ++col) {
    int pivot = -1;
    for (int r = rank; r < 4; ++r)
      if (m[r][col] != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(m[rank], m[pivot]);
    const Rational lead = m[rank][col];
    for (auto& v : m[rank]) v /= lead;
    for (int r = 0; r < 4; ++r) {
      if (r == rank || m[r][col] == 0) continue;
      const Rational f = m[r][col];
      for (int c = 0; c < 4; ++c) m[r][c] -= f * m[rank][c];
    }
    pivot_col[rank++] = col;
  }
  if (rank != 2) fail(ErrorKind::RankError, "rank of A is " + std::to_string(rank) + ", expected 2");
  std::vector<int> free_cols;
  for (int c = 0; c < 4; ++c)
    if (c != pivot_col[0] && c != pivot_col[1]) free_cols.push_back(c);
  std::array<Point4<Rational>, 2> basis{};
  for (int k = 0; k < 2; ++k) {
    Point4<Rational> z{};
    z[free_cols[k]] = 1;
    for (int r = 0; r < 2; ++r) z[pivot_col[r]] = -m[r][free_cols[k]];
    basis[k] = z;
  }
  return {basis[0], basis[1]};
}

inline KernelBasis<double> float_kernel(const PayoffMatrix<double>& a, double rtol) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = a(i, j);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = rtol * std::max(1.0, s(0));
  int rank = 0;
  for (int k = 0; k < 4; ++k)
    if (s(k) > cut) ++rank;
  if (rank != 2) fail(ErrorKind::RankError, "numerical rank of A is " + std::to_string(rank) + ", expected 2");
  KernelBasis<double> out;
  for (int i = 0; i < 4; ++i) {
    out.u[i] = svd.matrixV()(i, 2);
    out.v[i] = svd.matrixV()(i, 3);
  }
  return out;
}

}  // namespace detail

/// Basis of null(A): exact elimination for rationals, the two smallest right
/// singular vectors for doubles.
template <Scalar T>
KernelBasis<T> kernel_basis(const PayoffMatrix<T>& a, double rtol = 1e-10) {
  if constexpr (is_exact_v<T>) {
    (void)rtol;
    return detail::exact_kernel(a);
  } else {
    return detail::float_kernel(a, rtol);
  }
}

// ---------------------------------------------------------------------------
// Closed-form points of L on faces and edges

namespace detail {

inline std::array<int, 3> others(int i) {
  std::array<int, 3> out{};
  int k = 0;
  for (int n = 0; n < 4; ++n)
    if (n != i) out[k++] = n;
  return out;
}

inline std::array<int, 2> others(int i, int j) {
  std::array<int, 2> out{};
  int k = 0;
  for (int n = 0; n < 4; ++n)
    if (n != i && n != j) out[k++] = n;
  return out;
}

}  // namespace detail

/// The unique point of L in int F_{-i}; requires the subgraph on the other
/// three nodes to be a directed 3-cycle.
template <Scalar T>
Point4<T> face_kernel_point(const PayoffMatrix<T>& a, int i, double atol = 1e-12) {
  if (i < 0 || i > 3) fail(ErrorKind::PreconditionFailed, "node out of range");
  const auto [j, k, l] = detail::others(i);
  const int s1 = sign_of(a(j, k), atol);
  const int s2 = sign_of(a(k, l), atol);
  const int s3 = sign_of(a(l, j), atol);
  if (s1 == 0 || s1 != s2 || s2 != s3)
    fail(ErrorKind::PreconditionFailed,
         "subgraph without node " + std::to_string(i + 1) + " is not a directed 3-cycle");
  Point4<T> v{};
  v[i] = T(0);
  v[j] = a(k, l);
  v[k] = T(-a(j, l));
  v[l] = a(j, k);
  const T total = v[j] + v[k] + v[l];
  for (auto& c : v) c /= total;
  return v;
}

/// The point of L in int E_ij; requires a_ij = 0 and a 4-cycle through the
/// other two nodes, i.e. r = -a_jk/a_ik = -a_jl/a_il > 0 with a_ik a_il < 0.
template <Scalar T>
Point4<T> edge_kernel_point(const PayoffMatrix<T>& a, int i, int j, double atol = 1e-12) {
  if (i < 0 || i > 3 || j < 0 || j > 3 || i == j) fail(ErrorKind::PreconditionFailed, "bad edge");
  const std::string name = "E_" + std::to_string(i + 1) + std::to_string(j + 1);
  if (!is_zero(a(i, j), atol)) fail(ErrorKind::PreconditionFailed, "a_ij != 0 on " + name);
  const auto [k, l] = detail::others(i, j);
  const int sk = sign_of(a(i, k), atol);
  const int sl = sign_of(a(i, l), atol);
  if (sk == 0 || sl == 0 || sk == sl) fail(ErrorKind::PreconditionFailed, "no 4-cycle through " + name);
  const T r1 = T(-a(j, k)) / a(i, k);
  const T r2 = T(-a(j, l)) / a(i, l);
  if (!(r1 > 0) || !(r2 > 0)) fail(ErrorKind::PreconditionFailed, "nonpositive ratio on " + name);
  if constexpr (is_exact_v<T>) {
    if (r1 != r2) fail(ErrorKind::PreconditionFailed, "inconsistent ratios on " + name);
  } else {
    if (std::abs(r1 - r2) > 1e-9 * std::max(1.0, std::abs(r1)))
      fail(ErrorKind::PreconditionFailed, "inconsistent ratios on " + name);
  }
  Point4<T> y{};
  y[i] = r1 / (T(1) + r1);
  y[j] = T(1) / (T(1) + r1);
  return y;
}

// ---------------------------------------------------------------------------
// Section of L across the simplex

template <Scalar T>
struct SectionEndpoint {
  Point4<T> x{};
  SimplexLocus locus;
};

template <Scalar T>
struct NullLineSection {
  std::array<SectionEndpoint<T>, 2> endpoints{};
  bool K_nonempty = false;

  Point4<T> midpoint() const {
    Point4<T> m{};
    for (int i = 0; i < 4; ++i) m[i] = (endpoints[0].x[i] + endpoints[1].x[i]) / T(2);
    return m;
  }

  /// z(c) = (1-c) z0 + c z1.
  Point4<double> point_at(double c) const {
    const auto a = to_double_point(endpoints[0].x);
    const auto b = to_double_point(endpoints[1].x);
    Point4<double> z{};
    for (int i = 0; i < 4; ++i) z[i] = (1 - c) * a[i] + c * b[i];
    return z;
  }
};

/// Endpoints of L ∩ Δ³ from the closed-form witnesses, dispatched on the class.
/// Throws InconsistentClass if the computed loci contradict the class.
template <Scalar T>
NullLineSection<T> kernel_line_section(const PayoffMatrix<T>& a, const ClassLabel& label, double atol = 1e-12,
                                       double rtol = 1e-10) {
  if (!is_permanent_class(label.cls))
    fail(ErrorKind::PreconditionFailed, "kernel section needs a class I-V label, got " + std::string(to_string(label.cls)));
  if (!is_singular(a, rtol)) fail(ErrorKind::PreconditionFailed, "A is not singular");
  const SignDigraph g = build_digraph(a, atol);

  std::vector<int> cycle_faces;  // face F_{-i} carrying a 3-cycle
  for (const auto& c : g.three_cycles) {
    int missing = 0 + 1 + 2 + 3 - c[0] - c[1] - c[2];
    cycle_faces.push_back(missing);
  }
  std::sort(cycle_faces.begin(), cycle_faces.end());
  std::vector<std::pair<int, int>> zero_pairs;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (is_zero(a(i, j), atol)) zero_pairs.emplace_back(i, j);

  NullLineSection<T> s;
  s.K_nonempty = true;
  auto face = [&](int i) { return SectionEndpoint<T>{face_kernel_point(a, i, atol), SimplexLocus::face(i)}; };
  auto edge = [&](int i, int j) {
    return SectionEndpoint<T>{edge_kernel_point(a, i, j, atol), SimplexLocus::edge(i, j)};
  };
  auto inconsistent = [&](const std::string& why) {
    fail(ErrorKind::InconsistentClass, "class " + std::string(to_string(label.cls)) + ": " + why);
  };

  switch (label.cls) {
    case GraphClass::I:
    case GraphClass::II:
      if (cycle_faces.size() != 2) inconsistent("expected two 3-cycles");
      s.endpoints = {face(cycle_faces[0]), face(cycle_faces[1])};
      break;
    case GraphClass::III:
      if (cycle_faces.size() != 1 || zero_pairs.size() != 1) inconsistent("expected one 3-cycle and one zero pair");
      s.endpoints = {face(cycle_faces[0]), edge(zero_pairs[0].first, zero_pairs[0].second)};
      break;
    case GraphClass::IV: {
      if (cycle_faces.size() != 1) inconsistent("expected one 3-cycle");
      const int i = cycle_faces[0];
      Point4<T> e{};
      e[i] = T(1);
      s.endpoints = {face(i), SectionEndpoint<T>{e, SimplexLocus::vertex(i)}};
      break;
    }
    case GraphClass::V:
      if (zero_pairs.size() != 2) inconsistent("expected two zero pairs");
      s.endpoints = {edge(zero_pairs[0].first, zero_pairs[0].second), edge(zero_pairs[1].first, zero_pairs[1].second)};
      break;
    default: break;
  }

  const double scale = std::max(1.0, to_double(a.max_abs()));
  for (const auto& ep : s.endpoints) {
    if (locus_of(ep.x) != ep.locus)
      inconsistent("endpoint locus " + describe(locus_of(ep.x)) + " != " + describe(ep.locus));
    if constexpr (is_exact_v<T>) {
      for (const auto& r : apply(a, ep.x))
        if (r != 0) inconsistent("endpoint is not in null(A)");
    } else {
      if (residual_inf(a, ep.x) > 1e-9 * scale) inconsistent("endpoint is not in null(A)");
    }
  }
  return s;
}

/// Generic route: clip L against the facets x_i >= 0 using kernel_basis.
/// Returns nullopt when L misses the simplex.
template <Scalar T>
std::optional<std::array<Point4<T>, 2>> clip_null_line(const PayoffMatrix<T>& a, double rtol = 1e-10,
                                                      double zero_tol = 1e-13) {
  const KernelBasis<T> kb = kernel_basis(a, rtol);
  auto sum = [](const Point4<T>& p) { return p[0] + p[1] + p[2] + p[3]; };
  Point4<T> u = kb.u, v = kb.v;
  T su = sum(u), sv = sum(v);
  if (abs_value(sv) > abs_value(su)) {
    std::swap(u, v);
    std::swap(su, sv);
  }
  if (is_zero(su, zero_tol)) return std::nullopt;
  Point4<T> p{}, d{};
  for (int i = 0; i < 4; ++i) {
    p[i] = u[i] / su;
    d[i] = v[i] - sv / su * u[i];
  }
  std::optional<T> lo, hi;
  for (int i = 0; i < 4; ++i) {
    if (is_zero(d[i], zero_tol)) {
      if (p[i] < 0 && !is_zero(p[i], zero_tol)) return std::nullopt;
      continue;
    }
    const T t = T(-p[i]) / d[i];
    if (d[i] > 0) {
      if (!lo || t > *lo) lo = t;
    } else {
      if (!hi || t < *hi) hi = t;
    }
  }
  if (!lo || !hi || *lo > *hi) return std::nullopt;
  std::array<Point4<T>, 2> out{};
  for (int i = 0; i < 4; ++i) {
    out[0][i] = p[i] + *lo * d[i];
    out[1][i] = p[i] + *hi * d[i];
  }
  if constexpr (!is_exact_v<T>) {
    for (auto& e : out)
      for (auto& c : e)
        if (std::abs(c) <= zero_tol) c = 0.0;
  }
  return out;
}

/// Euclidean distance from x to the closed segment [a, b].
inline double distance_to_segment(const Point4<double>& x, const Point4<double>& a, const Point4<double>& b) {
  double dd = 0, t = 0;
  for (int i = 0; i < 4; ++i) {
    dd += (b[i] - a[i]) * (b[i] - a[i]);
    t += (x[i] - a[i]) * (b[i] - a[i]);
  }
  t = dd > 0 ? std::clamp(t / dd, 0.0, 1.0) : 0.0;
  double dist2 = 0;
  for (int i = 0; i < 4; ++i) {
    const double c = a[i] + t * (b[i] - a[i]) - x[i];
    dist2 += c * c;
  }
  return std::sqrt(dist2);
}

template <Scalar T>
double distance_to_K(const Point4<double>& x, const NullLineSection<T>& s) {
  if (!s.K_nonempty) fail(ErrorKind::PreconditionFailed, "K is empty");
  return distance_to_segment(x, to_double_point(s.endpoints[0].x), to_double_point(s.endpoints[1].x));
}

}  // namespace replicator4
