#pragma once

// Payoff matrices: parsing, normalization to skew-symmetric form, and the
// Pfaffian.
//
// Indices are 0-based throughout the C++ API (strategy k is index k-1);
// serialized forms use 1-based strategy labels.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "replicator4/errors.hpp"
#include "replicator4/scalar.hpp"

namespace replicator4 {

inline constexpr int kStrategies = 4;

template <class T>
using Matrix4 = std::array<std::array<T, 4>, 4>;

/// perm[i] is the image of node i.
using Permutation = std::array<int, 4>;

inline constexpr Permutation kIdentity{0, 1, 2, 3};

inline Permutation inverse(const Permutation& p) {
  Permutation inv{};
  for (int i = 0; i < 4; ++i) inv[p[i]] = i;
  return inv;
}

/// Unconstrained 4x4 payoff matrix as read from input.
template <Scalar T>
struct GeneralMatrix {
  Matrix4<T> b{};

  const T& operator()(int i, int j) const { return b[i][j]; }
  T& operator()(int i, int j) { return b[i][j]; }

  template <Scalar U>
  GeneralMatrix<U> cast() const {
    GeneralMatrix<U> out;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if constexpr (std::same_as<U, T>) {
          out.b[i][j] = b[i][j];
        } else if constexpr (std::same_as<U, double>) {
          out.b[i][j] = to_double(b[i][j]);
        } else {
          out.b[i][j] = Rational(b[i][j]);
        }
      }
    return out;
  }

  friend bool operator==(const GeneralMatrix&, const GeneralMatrix&) = default;
};

/// A validated nonzero skew-symmetric 4x4 matrix.
template <Scalar T>
class PayoffMatrix {
 public:
  /// Validates skew-symmetry (exactly for rationals, within `atol` for
  /// doubles, after which the float entries are made exactly skew).
  static PayoffMatrix from_entries(const Matrix4<T>& a, double atol = 1e-12) {
    Matrix4<T> out = a;
    for (int i = 0; i < 4; ++i) {
      if (!is_zero(T(a[i][i]), atol))
        fail(ErrorKind::NotConservative, "nonzero diagonal entry a_" + std::to_string(i + 1) + std::to_string(i + 1));
      out[i][i] = T(0);
      for (int j = i + 1; j < 4; ++j) {
        const T sum = a[i][j] + a[j][i];
        if (!is_zero(sum, atol))
          fail(ErrorKind::NotConservative, "a_" + std::to_string(i + 1) + std::to_string(j + 1) + " + a_" +
                                               std::to_string(j + 1) + std::to_string(i + 1) + " = " +
                                               format_scalar(sum));
        if constexpr (!is_exact_v<T>) {
          out[i][j] = 0.5 * (a[i][j] - a[j][i]);
          out[j][i] = -out[i][j];
        }
      }
    }
    bool all_zero = true;
    for (const auto& row : out)
      for (const auto& v : row) all_zero = all_zero && v == 0;
    if (all_zero) fail(ErrorKind::ZeroMatrix, "payoff matrix vanishes identically");
    return PayoffMatrix(out);
  }

  /// Builds from the six upper-triangular entries (a12, a13, a14, a23, a24, a34).
  static PayoffMatrix from_upper(const std::array<T, 6>& u) {
    Matrix4<T> a{};
    int k = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        a[i][j] = u[k++];
        a[j][i] = T(-a[i][j]);
      }
    return from_entries(a, 0.0);
  }

  const T& operator()(int i, int j) const { return a_[i][j]; }
  const Matrix4<T>& entries() const { return a_; }

  std::array<T, 6> upper() const {
    return {a_[0][1], a_[0][2], a_[0][3], a_[1][2], a_[1][3], a_[2][3]};
  }

  T max_abs() const {
    T m = T(0);
    for (const auto& row : a_)
      for (const auto& v : row) m = std::max(m, abs_value(v));
    return m;
  }

  PayoffMatrix<double> to_float() const {
    Matrix4<double> d{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) d[i][j] = to_double(a_[i][j]);
    return PayoffMatrix<double>::from_entries(d, 0.0);
  }

  /// Relabels nodes: entry (i,j) moves to (perm[i], perm[j]).
  PayoffMatrix relabeled(const Permutation& perm) const {
    Matrix4<T> out{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out[perm[i]][perm[j]] = a_[i][j];
    return PayoffMatrix(out);
  }

  friend bool operator==(const PayoffMatrix&, const PayoffMatrix&) = default;

 private:
  explicit PayoffMatrix(const Matrix4<T>& a) : a_(a) {}
  Matrix4<T> a_;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

// SAX handler that keeps every JSON number as its source text so decimal
// literals stay exact when converted to rationals.
class RawNumberDom : public nlohmann::json_sax<nlohmann::json> {
 public:
  nlohmann::json root;

  bool null() override { return insert(nullptr); }
  bool boolean(bool v) override { return insert(v); }
  bool number_integer(number_integer_t v) override { return insert(std::to_string(v)); }
  bool number_unsigned(number_unsigned_t v) override { return insert(std::to_string(v)); }
  bool number_float(number_float_t, const string_t& s) override { return insert(s); }
  bool string(string_t& s) override { return insert(s); }
  bool binary(binary_t&) override { return insert(nullptr); }
  bool start_object(std::size_t) override { return open(nlohmann::json::object()); }
  bool key(string_t& k) override {
    key_ = k;
    return true;
  }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(nlohmann::json::array()); }
  bool end_array() override { return close(); }
  bool parse_error(std::size_t position, const std::string&, const nlohmann::detail::exception& ex) override {
    fail(ErrorKind::ParseError, "malformed JSON at byte " + std::to_string(position) + ": " + ex.what());
  }

 private:
  nlohmann::json* place(nlohmann::json v) {
    if (stack_.empty()) {
      root = std::move(v);
      return &root;
    }
    nlohmann::json& top = *stack_.back();
    if (top.is_array()) {
      top.push_back(std::move(v));
      return &top.back();
    }
    nlohmann::json& slot = top[key_];
    slot = std::move(v);
    return &slot;
  }
  bool insert(nlohmann::json v) {
    place(std::move(v));
    return true;
  }
  bool open(nlohmann::json v) {
    stack_.push_back(place(std::move(v)));
    return true;
  }
  bool close() {
    stack_.pop_back();
    return true;
  }

  std::vector<nlohmann::json*> stack_;
  std::string key_;
};

inline GeneralMatrix<Rational> parse_json_matrix(std::string_view source) {
  RawNumberDom dom;
  nlohmann::json::sax_parse(source.begin(), source.end(), &dom);
  if (!dom.root.is_object() || !dom.root.contains("A"))
    fail(ErrorKind::ParseError, "JSON matrix must be an object with key \"A\"");
  const nlohmann::json& rows = dom.root["A"];
  if (!rows.is_array() || rows.size() != 4)
    fail(ErrorKind::DimensionError, "\"A\" must hold 4 rows");
  GeneralMatrix<Rational> m;
  for (int i = 0; i < 4; ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || row.size() != 4)
      fail(ErrorKind::DimensionError, "row " + std::to_string(i + 1) + " must hold 4 entries");
    for (int j = 0; j < 4; ++j) {
      if (!row[j].is_string())
        fail(ErrorKind::ParseError, "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is not numeric");
      m.b[i][j] = parse_rational(row[j].get<std::string>());
    }
  }
  return m;
}

inline GeneralMatrix<Rational> parse_text_matrix(std::string_view source) {
  std::vector<std::vector<Rational>> rows;
  std::vector<Rational> current;
  std::size_t count = 0;
  auto end_row = [&] {
    if (!current.empty()) rows.push_back(std::move(current));
    current.clear();
  };
  std::istringstream lines{std::string(source)};
  std::string line;
  while (std::getline(lines, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      if (token == "/") {
        end_row();
        continue;
      }
      current.push_back(parse_rational(token));
      ++count;
    }
    end_row();
  }
  if (count != 16)
    fail(ErrorKind::DimensionError, "expected 16 numbers, found " + std::to_string(count));
  GeneralMatrix<Rational> m;
  if (rows.size() == 1) {
    for (int k = 0; k < 16; ++k) m.b[k / 4][k % 4] = rows[0][k];
    return m;
  }
  if (rows.size() != 4)
    fail(ErrorKind::DimensionError, "expected 4 rows, found " + std::to_string(rows.size()));
  for (int i = 0; i < 4; ++i) {
    if (rows[i].size() != 4)
      fail(ErrorKind::DimensionError, "row " + std::to_string(i + 1) + " holds " + std::to_string(rows[i].size()) +
                                          " numbers");
    for (int j = 0; j < 4; ++j) m.b[i][j] = rows[i][j];
  }
  return m;
}

}  // namespace detail

/// Reads either 16 numbers (row-major; "/" tokens or newlines separate rows)
/// or a JSON object {"A": [[...] x4]}. Entries may be decimals, scientific
/// notation or "p/q"; all are kept exact.
inline GeneralMatrix<Rational> parse_matrix(std::string_view source) {
  const auto first = source.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && source[first] == '{') return detail::parse_json_matrix(source);
  return detail::parse_text_matrix(source);
}

/// Inverse of parse_matrix's text grammar.
template <Scalar T>
std::string format_matrix(const Matrix4<T>& m) {
  std::string out;
  for (int i = 0; i < 4; ++i) {
    if (i > 0) out += " / ";
    for (int j = 0; j < 4; ++j) {
      if (j > 0) out += ' ';
      out += format_scalar(m[i][j]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization and Pfaffian

/// Removes the column shift c_j = b_jj and checks the result is skew.
template <Scalar T>
PayoffMatrix<T> to_skew(const GeneralMatrix<T>& b, double atol = 1e-12) {
  if (atol < 0) fail(ErrorKind::PreconditionFailed, "atol must be nonnegative");
  Matrix4<T> a{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a[i][j] = b.b[i][j] - b.b[j][j];
  return PayoffMatrix<T>::from_entries(a, atol);
}

/// a12 a34 - a13 a24 + a14 a23; its square is det(A).
template <Scalar T>
T pfaffian(const PayoffMatrix<T>& a) {
  return a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
}

/// Exact zero test for rationals; |pf| <= rtol * max(1, max|a_ij|^2) for doubles.
template <Scalar T>
bool is_singular(const PayoffMatrix<T>& a, double rtol = 1e-10) {
  if (rtol <= 0) fail(ErrorKind::PreconditionFailed, "rtol must be positive");
  const T pf = pfaffian(a);
  if constexpr (is_exact_v<T>) {
    return pf == 0;
  } else {
    const double m = a.max_abs();
    return std::abs(pf) <= rtol * std::max(1.0, m * m);
  }
}

}  // namespace replicator4
