#pragma once

// Numerical certification of interior periodic orbits: reference points on
// K whose conserved functions cut out the orbit, Poincaré-section period
// detection, time averages and a Lyapunov-function stability probe.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "replicator4/dynamics.hpp"
#include "replicator4/errors.hpp"
#include "replicator4/kernelgeom.hpp"
#include "replicator4/payoff.hpp"

namespace replicator4 {

inline Mat<4> to_mat(const PayoffMatrix<double>& a) {
  Mat<4> m{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m[i][j] = a(i, j);
  return m;
}

/// Smallest singular value of d(φ_z1, φ_z2) restricted to the tangent space
/// 1ᵀv = 0 of the simplex at x.
template <std::size_t N>
double transversality_margin(const Vec<N>& z1, const Vec<N>& z2, const Vec<N>& x) {
  Vec<N> g1{}, g2{};
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < N; ++i) {
    g1[i] = -z1[i] / x[i];
    g2[i] = -z2[i] / x[i];
    m1 += g1[i];
    m2 += g2[i];
  }
  double p11 = 0, p12 = 0, p22 = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double a = g1[i] - m1 / N, b = g2[i] - m2 / N;
    p11 += a * a;
    p12 += a * b;
    p22 += b * b;
  }
  // Smaller eigenvalue of the 2x2 Gram matrix.
  const double tr = p11 + p22;
  const double det = p11 * p22 - p12 * p12;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  const double lo = std::max(0.0, tr / 2 - disc);
  // Recompute from the larger root to avoid cancellation.
  const double hi = tr / 2 + disc;
  const double lo_stable = hi > 0 ? std::max(0.0, det) / hi : lo;
  return std::sqrt(lo_stable);
}

struct ReferencePair {
  Vec<4> z_prime{};
  Vec<4> z_double_prime{};
  /// Section parameters: z = (1-c) K_0 + c K_1.
  double c_prime = 0.5;
  double c_double_prime = 0.0;
  /// Endpoints of the closed segment K.
  std::array<Vec<4>, 2> segment{};
  /// Minimum margin seen so far (selection arc, later the orbit).
  double transversality_margin = 0.0;
  /// Section parameters of 𝒜 = {α ∈ K : φ_z'(α) = φ_z'(x0)}.
  std::vector<double> level_roots;
  /// Section parameters excluded for z'' (roots of the affine ψ_α).
  std::vector<double> excluded;
};

inline double distance_to_segment(const Vec<4>& x, const std::array<Vec<4>, 2>& seg) {
  return distance_to_segment(Point4<double>(x), Point4<double>(seg[0]), Point4<double>(seg[1]));
}

struct OrbitOptions {
  IntegratorOptions integrator{};
  double closure_tol = 1e-6;
  std::size_t quadrature_points = 4096;
  std::size_t reference_samples = 1024;
  /// Length of the integrated arc used to check transversality during selection.
  double selection_arc = 2.0;
  double min_margin = 1e-8;
  double exclusion_margin = 1e-6;
};

namespace detail {

inline double point_phi(const Vec<4>& z, const Vec<4>& x) {
  // φ_z(x) with z allowed on the boundary (zero weights drop out).
  double s = 0;
  for (int i = 0; i < 4; ++i)
    if (z[i] > 0) s -= z[i] * std::log(x[i] / z[i]);
  return s;
}

inline Vec<4> lerp(const std::array<Vec<4>, 2>& seg, double c) {
  Vec<4> z{};
  for (int i = 0; i < 4; ++i) z[i] = (1 - c) * seg[0][i] + c * seg[1][i];
  return z;
}

// Root of g on (lo, hi) by bisection, given g(lo) and g(hi) of opposite signs.
template <class F>
double bisect(F&& g, double lo, double hi) {
  double glo = g(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

template <Scalar T>
std::array<Vec<4>, 2> segment_of(const NullLineSection<T>& s) {
  return {Vec<4>(to_double_point(s.endpoints[0].x)), Vec<4>(to_double_point(s.endpoints[1].x))};
}

/// Chooses z' = z(0.5) and a z'' on K whose joint level set through x0 avoids
/// K, skipping candidates near the roots of the affine functions ψ_α and
/// requiring a positive transversality margin along a short arc.
template <Scalar T>
ReferencePair select_reference_points(const PayoffMatrix<double>& a, const NullLineSection<T>& section,
                                      const Vec<4>& x0, const OrbitOptions& opts = {}) {
  if (!is_interior(x0)) fail(ErrorKind::PreconditionFailed, "x0 must be strictly interior");
  ReferencePair pair;
  pair.segment = segment_of(section);
  if (distance_to_segment(x0, pair.segment) <= 1e-8) fail(ErrorKind::PreconditionFailed, "x0 lies on K");

  pair.c_prime = 0.5;
  pair.z_prime = detail::lerp(pair.segment, 0.5);
  const double level = detail::point_phi(pair.z_prime, x0);
  auto g = [&](double c) { return detail::point_phi(pair.z_prime, detail::lerp(pair.segment, c)) - level; };

  // φ_z' restricted to K is convex with minimum 0 at c = 1/2 and blows up at
  // the boundary endpoints, so each half holds at most one root.
  constexpr double kEdge = 1e-300;
  if (g(kEdge) > 0) pair.level_roots.push_back(detail::bisect(g, kEdge, 0.5));
  if (g(1 - 1e-16) > 0) pair.level_roots.push_back(detail::bisect(g, 0.5, 1 - 1e-16));

  for (double c_alpha : pair.level_roots) {
    const Vec<4> alpha = detail::lerp(pair.segment, c_alpha);
    double psi0 = 0, psi1 = 0;
    for (int i = 0; i < 4; ++i) {
      const double lr = std::log(x0[i] / alpha[i]);
      psi0 -= pair.segment[0][i] * lr;
      psi1 -= pair.segment[1][i] * lr;
    }
    if (psi0 != psi1) {
      const double c = psi0 / (psi0 - psi1);
      if (c > 0 && c < 1) pair.excluded.push_back(c);
    }
  }

  static constexpr std::array<double, 16> kCandidates{0.25, 0.75, 0.4, 0.6, 0.1, 0.9, 0.3, 0.7,
                                                      0.2, 0.8, 0.15, 0.85, 0.35, 0.65, 0.45, 0.55};
  const Mat<4> m = to_mat(a);
  std::optional<Trajectory<4>> arc;
  for (double c : kCandidates) {
    if (std::abs(c - pair.c_prime) <= opts.exclusion_margin) continue;
    if (std::any_of(pair.excluded.begin(), pair.excluded.end(),
                    [&](double e) { return std::abs(c - e) <= opts.exclusion_margin; }))
      continue;
    const Vec<4> z2 = detail::lerp(pair.segment, c);
    if (!arc) arc = integrate<4>(m, x0, opts.selection_arc, opts.integrator);
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& x : arc->states()) margin = std::min(margin, transversality_margin(pair.z_prime, z2, x));
    if (margin > opts.min_margin) {
      pair.z_double_prime = z2;
      pair.c_double_prime = c;
      pair.transversality_margin = margin;
      return pair;
    }
  }
  fail(ErrorKind::SelectionExhausted, "no admissible second reference point on K");
}

template <std::size_t N>
struct PeriodResult {
  double period = 0;
  double closure_residual = 0;
  Vec<N> time_average{};
  Trajectory<N> trajectory;
};

/// Integrates from x0 and returns the first same-direction crossing of the
/// section through x0 (normal = initial velocity) that closes within
/// `closure_tol`, refined by bisection on the dense output.
template <std::size_t N>
PeriodResult<N> find_period(const Mat<N>& a, const Vec<N>& x0, double search_horizon, const OrbitOptions& opts = {}) {
  if (!(search_horizon > 0)) fail(ErrorKind::PreconditionFailed, "search horizon must be positive");
  const Vec<N> normal = vector_field(a, x0);
  if (norm2(normal) <= 1e-12) fail(ErrorKind::EquilibriumStart, "x0 is an equilibrium");

  PeriodResult<N> out;
  out.trajectory = integrate<N>(a, x0, search_horizon, opts.integrator);
  const Trajectory<N>& tr = out.trajectory;
  auto section = [&](const Vec<N>& x) {
    double s = 0;
    for (std::size_t i = 0; i < N; ++i) s += normal[i] * (x[i] - x0[i]);
    return s;
  };

  double best_residual = std::numeric_limits<double>::infinity(), best_time = 0;
  const auto& times = tr.times();
  const auto& states = tr.states();
  // Crossings count only once the orbit has left a neighbourhood of x0.
  bool armed = false;
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!armed) {
      armed = distance(states[k], x0) > 10 * opts.closure_tol;
      continue;
    }
    const double s_prev = section(states[k - 1]);
    const double s_next = section(states[k]);
    if (!(s_prev < 0 && s_next >= 0)) continue;
    double lo = times[k - 1], hi = times[k];
    for (int it = 0; it < 100 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (section(tr.state_at(mid)) < 0 ? lo : hi) = mid;
    }
    const double t_cross = 0.5 * (lo + hi);
    const double residual = distance(tr.state_at(t_cross), x0);
    if (residual < best_residual) {
      best_residual = residual;
      best_time = t_cross;
    }
    if (residual <= opts.closure_tol) {
      out.period = t_cross;
      out.closure_residual = residual;
      break;
    }
  }
  if (out.period == 0)
    fail(ErrorKind::NoClosureFound, "no return within horizon " + std::to_string(search_horizon) +
                                        "; best candidate t=" + std::to_string(best_time) +
                                        " residual=" + std::to_string(best_residual));

  // Trapezoidal rule over one period; spectrally accurate for periodic data.
  const std::size_t m = std::max<std::size_t>(opts.quadrature_points, 2);
  const double h = out.period / static_cast<double>(m);
  Vec<N> acc{};
  for (std::size_t k = 0; k <= m; ++k) {
    const Vec<N> x = k == 0 ? x0 : tr.state_at(static_cast<double>(k) * h);
    const double w = (k == 0 || k == m) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < N; ++i) acc[i] += w * x[i];
  }
  for (std::size_t i = 0; i < N; ++i) out.time_average[i] = acc[i] * h / out.period;
  return out;
}

struct StabilityProbe {
  double delta = 0;
  std::vector<double> V_values;
  double max_tube_distance = 0;
  double V_drift = 0;
  double acceptance_multiple = 50;
};

struct OrbitReport {
  Vec<4> x0{};
  double period = 0;
  double closure_residual = 0;
  Vec<4> time_average{};
  double avg_distance_to_K = 0;
  std::array<double, 2> drift_phi{};
  double transversality_margin = 0;
  /// One period of the orbit at uniform spacing, x(0) first.
  std::vector<Vec<4>> samples;
  std::optional<StabilityProbe> stability;
};

/// Certifies the periodic orbit through x0 and measures the quantities the
/// interior theory predicts for it.
inline OrbitReport detect_period(const PayoffMatrix<double>& a, const Vec<4>& x0, ReferencePair& pair,
                                 double search_horizon, const OrbitOptions& opts = {}) {
  if (!is_interior(x0)) fail(ErrorKind::PreconditionFailed, "x0 must be strictly interior");
  if (distance_to_segment(x0, pair.segment) <= 1e-8) {
    if (norm2(vector_field(to_mat(a), x0)) <= 1e-12) fail(ErrorKind::EquilibriumStart, "x0 is an equilibrium");
    fail(ErrorKind::PreconditionFailed, "x0 lies on K");
  }
  const Mat<4> m = to_mat(a);
  PeriodResult<4> res = find_period<4>(m, x0, search_horizon, opts);

  OrbitReport rep;
  rep.x0 = x0;
  rep.period = res.period;
  rep.closure_residual = res.closure_residual;
  rep.time_average = res.time_average;
  rep.avg_distance_to_K = distance_to_segment(res.time_average, pair.segment);

  const std::size_t n = std::max<std::size_t>(opts.reference_samples, 8);
  rep.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    rep.samples.push_back(res.trajectory.state_at(res.period * static_cast<double>(k) / static_cast<double>(n)));

  const auto& times = res.trajectory.times();
  const auto& logs = res.trajectory.log_states();
  const double p1 = detail::phi_log(pair.z_prime, logs.front());
  const double p2 = detail::phi_log(pair.z_double_prime, logs.front());
  double margin = pair.transversality_margin;
  for (std::size_t k = 0; k < times.size() && times[k] <= res.period; ++k) {
    rep.drift_phi[0] = std::max(rep.drift_phi[0], std::abs(detail::phi_log(pair.z_prime, logs[k]) - p1));
    rep.drift_phi[1] = std::max(rep.drift_phi[1], std::abs(detail::phi_log(pair.z_double_prime, logs[k]) - p2));
    margin = std::min(margin, transversality_margin(pair.z_prime, pair.z_double_prime, res.trajectory.states()[k]));
  }
  rep.transversality_margin = margin;
  pair.transversality_margin = margin;
  return rep;
}

namespace detail {

inline double distance_to_closed_polyline(const Vec<4>& x, const std::vector<Vec<4>>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec<4>& p = poly[k];
    const Vec<4>& q = poly[(k + 1) % poly.size()];
    best = std::min(best, distance_to_segment(Point4<double>(x), Point4<double>(p), Point4<double>(q)));
  }
  return best;
}

}  // namespace detail

/// Perturbs x0 by `delta` in random tangent directions, integrates each probe
/// for three periods and records the Lyapunov function
/// V = (φ_z' - c')² + (φ_z'' - c'')² and the distance to the reference orbit.
/// Throws ProbeEscaped if a probe leaves the tube of radius multiple·delta.
inline StabilityProbe stability_probe(const PayoffMatrix<double>& a, const OrbitReport& report,
                                      const ReferencePair& pair, double delta, int n_probes, std::uint64_t seed,
                                      const OrbitOptions& opts = {}, double acceptance_multiple = 50.0) {
  if (delta < 0 || n_probes < 1) fail(ErrorKind::PreconditionFailed, "need delta >= 0 and at least one probe");
  if (report.period <= 0 || report.samples.empty()) fail(ErrorKind::PreconditionFailed, "orbit is not certified");
  const Vec<4>& x0 = report.x0;
  if (delta > 0 && delta >= distance_to_segment(x0, pair.segment))
    fail(ErrorKind::PreconditionFailed, "perturbation radius reaches K");

  const double c1 = detail::point_phi(pair.z_prime, x0);
  const double c2 = detail::point_phi(pair.z_double_prime, x0);
  auto lyapunov = [&](const Vec<4>& u) {
    const double d1 = detail::phi_log(pair.z_prime, u) - c1;
    const double d2 = detail::phi_log(pair.z_double_prime, u) - c2;
    return d1 * d1 + d2 * d2;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Vec<4>> starts;
  for (int p = 0; p < n_probes; ++p) {
    Vec<4> dir{};
    double mean = 0;
    for (auto& c : dir) mean += (c = gauss(rng));
    mean /= 4;
    for (auto& c : dir) c -= mean;
    const double nrm = norm2(dir);
    Vec<4> x = x0;
    for (int i = 0; i < 4; ++i) x[i] += delta * dir[i] / nrm;
    if (!is_interior(x)) fail(ErrorKind::PreconditionFailed, "perturbed start leaves the simplex interior");
    starts.push_back(x);
  }

  StabilityProbe probe;
  probe.delta = delta;
  probe.acceptance_multiple = acceptance_multiple;
  const Mat<4> m = to_mat(a);
  const double horizon = 3 * report.period;
  const double dt = report.period / 400;
  for (const auto& x : starts) {
    const Trajectory<4> tr = integrate<4>(m, x, horizon, opts.integrator);
    const double v0 = lyapunov(tr.log_states().front());
    probe.V_values.push_back(v0);
    for (const auto& u : tr.log_states()) probe.V_drift = std::max(probe.V_drift, std::abs(lyapunov(u) - v0));
    for (double t = 0; t <= horizon; t += dt)
      probe.max_tube_distance =
          std::max(probe.max_tube_distance, detail::distance_to_closed_polyline(tr.state_at(t), report.samples));
  }
  if (probe.max_tube_distance > acceptance_multiple * delta + opts.closure_tol)
    fail(ErrorKind::ProbeEscaped, "max tube distance " + std::to_string(probe.max_tube_distance) + " exceeds " +
                                      std::to_string(acceptance_multiple) + " * delta = " +
                                      std::to_string(acceptance_multiple * delta));
  return probe;
}

}  // namespace replicator4
