#pragma once

// Conservative replicator flow x_i' = x_i (Ax)_i on the N-simplex, integrated
// in log coordinates u_i = ln x_i where u_i' = (A softmax(u))_i. The shift
// u -> u - logsumexp(u) after every accepted step keeps 1ᵀx = 1 without
// touching positivity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "replicator4/errors.hpp"

namespace replicator4 {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
using Mat = std::array<Vec<N>, N>;

template <std::size_t N>
Vec<N> mat_vec(const Mat<N>& a, const Vec<N>& x) {
  Vec<N> y{};
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < N; ++j) s += a[i][j] * x[j];
    y[i] = s;
  }
  return y;
}

template <std::size_t N>
double norm2(const Vec<N>& v) {
  double s = 0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

template <std::size_t N>
double distance(const Vec<N>& a, const Vec<N>& b) {
  double s = 0;
  for (std::size_t i = 0; i < N; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

template <std::size_t N>
bool is_interior(const Vec<N>& x) {
  return std::all_of(x.begin(), x.end(), [](double c) { return c > 0 && std::isfinite(c); });
}

/// f_i = x_i (Ax)_i. For skew A, 1ᵀf = xᵀAx = 0.
template <std::size_t N>
Vec<N> vector_field(const Mat<N>& a, const Vec<N>& x) {
  Vec<N> f = mat_vec(a, x);
  for (std::size_t i = 0; i < N; ++i) f[i] *= x[i];
  return f;
}

/// φ_z(x) = -Σ z_i ln(x_i / z_i); both arguments strictly interior.
template <std::size_t N>
double phi(const Vec<N>& z, const Vec<N>& x) {
  double s = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!(z[i] > 0) || !(x[i] > 0)) fail(ErrorKind::DomainError, "phi needs strictly interior arguments");
    s -= z[i] * std::log(x[i] / z[i]);
  }
  return s;
}

namespace detail {

template <std::size_t N>
Vec<N> softmax(const Vec<N>& u) {
  const double m = *std::max_element(u.begin(), u.end());
  Vec<N> x{};
  double s = 0;
  for (std::size_t i = 0; i < N; ++i) s += (x[i] = std::exp(u[i] - m));
  for (auto& c : x) c /= s;
  return x;
}

template <std::size_t N>
void normalize_log(Vec<N>& u) {
  const double m = *std::max_element(u.begin(), u.end());
  double s = 0;
  for (double c : u) s += std::exp(c - m);
  const double shift = m + std::log(s);
  for (auto& c : u) c -= shift;
}

// φ_z evaluated from log-shares; z_i ln z_i terms with z_i = 0 drop out.
template <std::size_t N>
double phi_log(const Vec<N>& z, const Vec<N>& u) {
  double s = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (z[i] > 0) s -= z[i] * (u[i] - std::log(z[i]));
  return s;
}

// Dormand–Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

template <std::size_t N>
struct LogField {
  const Mat<N>& a;
  Vec<N> operator()(const Vec<N>& u) const { return mat_vec(a, softmax(u)); }
};

// One DP5 step from u (with derivative k1) of size h. Returns the 5th-order
// solution; `err` receives the embedded error estimate and `k7` the
// derivative at the new point.
template <std::size_t N>
Vec<N> dp5_step(const LogField<N>& f, const Vec<N>& u, const Vec<N>& k1, double h, std::type_identity_t<Vec<N>>* err,
              std::type_identity_t<Vec<N>>* k7_out) {
  using T = DormandPrince;
  Vec<N> y{};
  auto stage = [&](auto&& combine) {
    for (std::size_t i = 0; i < N; ++i) y[i] = u[i] + h * combine(i);
    return f(y);
  };
  const Vec<N> k2 = stage([&](std::size_t i) { return T::a21 * k1[i]; });
  const Vec<N> k3 = stage([&](std::size_t i) { return T::a31 * k1[i] + T::a32 * k2[i]; });
  const Vec<N> k4 = stage([&](std::size_t i) { return T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]; });
  const Vec<N> k5 =
      stage([&](std::size_t i) { return T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]; });
  const Vec<N> k6 = stage([&](std::size_t i) {
    return T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] + T::a65 * k5[i];
  });
  Vec<N> next{};
  for (std::size_t i = 0; i < N; ++i)
    next[i] = u[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] + T::b5 * k5[i] + T::b6 * k6[i]);
  if (err || k7_out) {
    const Vec<N> k7 = f(next);
    if (err)
      for (std::size_t i = 0; i < N; ++i)
        (*err)[i] = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] + T::e6 * k6[i] + T::e7 * k7[i]);
    if (k7_out) *k7_out = k7;
  }
  return next;
}

}  // namespace detail

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Initial step; 0 picks one from the field magnitude.
  double initial_step = 0.0;
  double max_step = 1.0;
  /// Relative step floor; below it the integration aborts.
  double min_step = 1e-13;
  std::size_t max_steps = 50'000'000;
  /// Ceiling on monitored φ_z drift; infinity disables the check.
  double drift_ceiling = std::numeric_limits<double>::infinity();
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

template <std::size_t N>
class Trajectory;

/// Adaptive DP5(4) integration from interior x0 over [0, t_end]. `stop`, if
/// given, is consulted after each accepted step and ends the run early.
template <std::size_t N>
Trajectory<N> integrate(const Mat<N>& a, const Vec<N>& x0, double t_end, const IntegratorOptions& opts = {},
                        std::span<const Vec<N>> monitored = {},
                        const std::function<bool(double, const Vec<N>&)>& stop = {});

/// Accepted steps of an integration run with dense evaluation in between.
template <std::size_t N>
class Trajectory {
 public:
  Trajectory() = default;

  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec<N>>& states() const { return states_; }
  /// Normalized log-shares, finite even where a share underflows to 0.
  const std::vector<Vec<N>>& log_states() const { return log_states_; }
  const StepStats& step_stats() const { return stats_; }
  const std::vector<Vec<N>>& monitored() const { return monitored_; }
  /// max_t |φ_z(x(t)) - φ_z(x(0))| for each monitored z.
  const std::vector<double>& drift() const { return drift_; }
  const Mat<N>& payoff() const { return a_; }

  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  const Vec<N>& initial() const { return states_.front(); }
  const Vec<N>& final_state() const { return states_.back(); }

  /// Log-shares at any t in [t_begin, t_end], by a partial DP5 step from the
  /// preceding accepted state (same local order as the integrator).
  Vec<N> log_state_at(double t) const {
    if (t <= times_.front()) return log_states_.front();
    if (t >= times_.back()) return log_states_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double h = t - times_[k];
    if (h == 0) return log_states_[k];
    const detail::LogField<N> f{a_};
    Vec<N> u = detail::dp5_step(f, log_states_[k], f(log_states_[k]), h, nullptr, nullptr);
    detail::normalize_log(u);
    return u;
  }

  Vec<N> state_at(double t) const { return detail::softmax(log_state_at(t)); }

  /// States on a uniform grid t_begin, t_begin + dt, ..., plus t_end.
  std::vector<std::pair<double, Vec<N>>> sample(double dt) const {
    if (!(dt > 0)) fail(ErrorKind::PreconditionFailed, "sampling interval must be positive");
    std::vector<std::pair<double, Vec<N>>> out;
    const double t0 = t_begin(), t1 = t_end();
    const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = t0 + static_cast<double>(k) * dt;
      out.emplace_back(t, state_at(t));
    }
    if (t1 - out.back().first > 1e-9 * dt) out.emplace_back(t1, final_state());
    return out;
  }

 private:
  template <std::size_t M>
  friend Trajectory<M> integrate(const Mat<M>& a, const Vec<M>& x0, double t_end, const IntegratorOptions& opts,
                                 std::span<const Vec<M>> monitored,
                                 const std::function<bool(double, const Vec<M>&)>& stop);

  Mat<N> a_{};
  std::vector<double> times_;
  std::vector<Vec<N>> states_;
  std::vector<Vec<N>> log_states_;
  StepStats stats_;
  std::vector<Vec<N>> monitored_;
  std::vector<double> drift_;
};

template <std::size_t N>
Trajectory<N> integrate(const Mat<N>& a, const Vec<N>& x0, double t_end, const IntegratorOptions& opts,
                        std::span<const Vec<N>> monitored, const std::function<bool(double, const Vec<N>&)>& stop) {
  if (!(t_end > 0)) fail(ErrorKind::PreconditionFailed, "t_end must be positive");
  if (!is_interior(x0)) fail(ErrorKind::PreconditionFailed, "initial state must be strictly interior");
  double sum = 0;
  for (double c : x0) sum += c;
  if (std::abs(sum - 1) > 1e-9) fail(ErrorKind::PreconditionFailed, "initial state is not on the simplex");

  Trajectory<N> tr;
  tr.a_ = a;
  tr.monitored_.assign(monitored.begin(), monitored.end());
  tr.drift_.assign(monitored.size(), 0.0);

  Vec<N> u{};
  for (std::size_t i = 0; i < N; ++i) u[i] = std::log(x0[i]);
  detail::normalize_log(u);
  std::vector<double> phi0;
  for (const auto& z : monitored) phi0.push_back(detail::phi_log(z, u));

  const detail::LogField<N> f{a};
  double t = 0;
  tr.times_.push_back(t);
  tr.log_states_.push_back(u);
  tr.states_.push_back(detail::softmax(u));

  Vec<N> k1 = f(u);
  double h = opts.initial_step;
  if (!(h > 0)) {
    const double scale = std::max(norm2(k1), 1e-3);
    h = std::min(opts.max_step, 0.01 / scale);
  }
  constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 5.0;
  while (t < t_end) {
    if (tr.stats_.accepted + tr.stats_.rejected >= opts.max_steps)
      fail(ErrorKind::StepSizeUnderflow, "step budget exhausted at t=" + std::to_string(t));
    h = std::min({h, opts.max_step, t_end - t});
    Vec<N> err{}, k7{};
    Vec<N> next = detail::dp5_step(f, u, k1, h, &err, &k7);
    double en = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opts.atol + opts.rtol * std::max(std::abs(u[i]), std::abs(next[i]));
      en += (err[i] / sc) * (err[i] / sc);
    }
    en = std::sqrt(en / static_cast<double>(N));
    if (!std::isfinite(en)) en = 1e10;
    if (en <= 1.0) {
      t = (t_end - t - h <= 1e-15 * std::max(1.0, t_end)) ? t_end : t + h;
      detail::normalize_log(next);
      u = next;
      k1 = k7;
      ++tr.stats_.accepted;
      tr.times_.push_back(t);
      tr.log_states_.push_back(u);
      tr.states_.push_back(detail::softmax(u));
      for (std::size_t m = 0; m < monitored.size(); ++m) {
        const double d = std::abs(detail::phi_log(monitored[m], u) - phi0[m]);
        tr.drift_[m] = std::max(tr.drift_[m], d);
        if (d > opts.drift_ceiling)
          fail(ErrorKind::DriftBudgetExceeded,
               "phi drift " + std::to_string(d) + " exceeds " + std::to_string(opts.drift_ceiling));
      }
      const double factor = en == 0 ? kMaxFactor : std::clamp(kSafety * std::pow(en, -0.2), kMinFactor, kMaxFactor);
      h *= factor;
      if (stop && stop(t, tr.states_.back())) break;
    } else {
      ++tr.stats_.rejected;
      h *= std::max(kMinFactor, kSafety * std::pow(en, -0.2));
      if (h < opts.min_step * std::max(1.0, std::abs(t)))
        fail(ErrorKind::StepSizeUnderflow, "step size underflow at t=" + std::to_string(t));
    }
  }
  return tr;
}

/// max_t |φ_z(x(t)) - φ_z(x(0))| over the accepted states.
template <std::size_t N>
double phi_drift(const Trajectory<N>& tr, const Vec<N>& z) {
  for (double c : z)
    if (!(c > 0)) fail(ErrorKind::DomainError, "reference point must be strictly interior");
  const double p0 = detail::phi_log(z, tr.log_states().front());
  double d = 0;
  for (const auto& u : tr.log_states()) d = std::max(d, std::abs(detail::phi_log(z, u) - p0));
  return d;
}

/// min_i x_i(t) over accepted steps with t >= t_from.
template <std::size_t N>
double min_share(const Trajectory<N>& tr, double t_from = 0) {
  double m = std::numeric_limits<double>::infinity();
  const auto& ts = tr.times();
  const auto& xs = tr.states();
  for (std::size_t k = 0; k < ts.size(); ++k)
    if (ts[k] >= t_from)
      for (double c : xs[k]) m = std::min(m, c);
  return m;
}

/// Half centroid, half Dirichlet(1): interior starts with every share >= 1/(2N).
template <std::size_t N>
Vec<N> random_start(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vec<N> x{};
  double s = 0;
  for (auto& c : x) s += (c = g(rng));
  for (auto& c : x) c = 0.5 * c / s + 0.5 / static_cast<double>(N);
  return x;
}

}  // namespace replicator4
