#pragma once

// Sign-pattern digraph of a skew-symmetric payoff matrix: edge i -> j iff
// a_ij > 0. With four nodes every directed cycle has length 3 or 4, so cycles
// are enumerated by brute force.

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "replicator4/errors.hpp"
#include "replicator4/payoff.hpp"

namespace replicator4 {

using Adjacency = std::array<std::array<bool, 4>, 4>;
using ThreeCycle = std::array<int, 3>;
using FourCycle = std::array<int, 4>;

struct SignDigraph {
  Adjacency adj{};
  /// Rotated so the smallest node comes first.
  std::vector<ThreeCycle> three_cycles;
  std::vector<FourCycle> four_cycles;

  bool has_edge(int i, int j) const { return adj[i][j]; }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (adj[i][j]) out.emplace_back(i, j);
    return out;
  }

  int edge_count() const { return static_cast<int>(edges().size()); }

  /// Enumerates all directed 3- and 4-cycles of `adj`.
  static SignDigraph from_adjacency(const Adjacency& adj) {
    SignDigraph g;
    g.adj = adj;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k) {
          if (adj[i][j] && adj[j][k] && adj[k][i]) g.three_cycles.push_back({i, j, k});
          if (adj[i][k] && adj[k][j] && adj[j][i]) g.three_cycles.push_back({i, k, j});
        }
    // Each directed Hamiltonian cycle has exactly one rotation starting at 0.
    std::array<int, 3> rest{1, 2, 3};
    do {
      const FourCycle c{0, rest[0], rest[1], rest[2]};
      if (adj[c[0]][c[1]] && adj[c[1]][c[2]] && adj[c[2]][c[3]] && adj[c[3]][c[0]]) g.four_cycles.push_back(c);
    } while (std::next_permutation(rest.begin(), rest.end()));
    return g;
  }

  /// The digraph with node i renamed perm[i].
  SignDigraph relabeled(const Permutation& perm) const {
    Adjacency out{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out[perm[i]][perm[j]] = adj[i][j];
    return from_adjacency(out);
  }
};

/// Edge (i,j) iff a_ij > 0; for doubles entries with |a_ij| <= atol count as zero.
template <Scalar T>
SignDigraph build_digraph(const PayoffMatrix<T>& a, double atol = 1e-12) {
  Adjacency adj{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) adj[i][j] = i != j && sign_of(a(i, j), atol) > 0;
  return SignDigraph::from_adjacency(adj);
}

inline bool has_cycle(const SignDigraph& g) { return !g.three_cycles.empty() || !g.four_cycles.empty(); }

// ---------------------------------------------------------------------------
// Isomorphism classes

/// The five cyclic classes, plus NoCycle, plus Other: a cyclic pattern outside
/// the five classes. Every Other pattern forces pf(A) != 0 by sign alone, so
/// it never arises from a singular matrix.
enum class GraphClass { I, II, III, IV, V, NoCycle, Other };

constexpr std::string_view to_string(GraphClass c) {
  switch (c) {
    case GraphClass::I: return "I";
    case GraphClass::II: return "II";
    case GraphClass::III: return "III";
    case GraphClass::IV: return "IV";
    case GraphClass::V: return "V";
    case GraphClass::NoCycle: return "NoCycle";
    case GraphClass::Other: return "Other";
  }
  return "?";
}

inline std::optional<GraphClass> parse_graph_class(std::string_view s) {
  for (GraphClass c : {GraphClass::I, GraphClass::II, GraphClass::III, GraphClass::IV, GraphClass::V,
                       GraphClass::NoCycle, GraphClass::Other})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

constexpr bool is_permanent_class(GraphClass c) {
  return c == GraphClass::I || c == GraphClass::II || c == GraphClass::III || c == GraphClass::IV ||
         c == GraphClass::V;
}

struct ClassSignature {
  int edges;
  int three_cycles;
  int four_cycles;
  friend bool operator==(const ClassSignature&, const ClassSignature&) = default;
};

inline ClassSignature signature_of(const SignDigraph& g) {
  return {g.edge_count(), static_cast<int>(g.three_cycles.size()), static_cast<int>(g.four_cycles.size())};
}

struct CanonicalClass {
  GraphClass cls;
  std::vector<std::pair<int, int>> edges;  // 0-based
  ClassSignature signature;
};

/// One fixed representative per class, as drawn in the reference figure.
inline const std::array<CanonicalClass, 5>& canonical_classes() {
  static const std::array<CanonicalClass, 5> table{{
      {GraphClass::I, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 1}, {3, 0}}, {6, 2, 1}},
      {GraphClass::II, {{1, 2}, {2, 3}, {3, 1}, {3, 0}, {0, 2}}, {5, 2, 0}},
      {GraphClass::III, {{1, 3}, {3, 2}, {2, 1}, {0, 2}, {3, 0}}, {5, 1, 1}},
      {GraphClass::IV, {{1, 3}, {3, 2}, {2, 1}}, {3, 1, 0}},
      {GraphClass::V, {{0, 2}, {2, 1}, {1, 3}, {3, 0}}, {4, 0, 1}},
  }};
  return table;
}

inline Adjacency canonical_adjacency(GraphClass c) {
  Adjacency adj{};
  for (const auto& entry : canonical_classes())
    if (entry.cls == c)
      for (auto [i, j] : entry.edges) adj[i][j] = true;
  return adj;
}

struct ClassLabel {
  GraphClass cls = GraphClass::NoCycle;
  /// Maps input node i to canonical node relabeling[i]; present for I..V.
  std::optional<Permutation> relabeling;
};

/// Identifies the class by exhaustive search over the 24 relabelings; the
/// first permutation in lexicographic order that matches is reported.
inline ClassLabel classify(const SignDigraph& g) {
  if (!has_cycle(g)) return {GraphClass::NoCycle, std::nullopt};
  const ClassSignature sig = signature_of(g);
  for (const auto& entry : canonical_classes()) {
    if (entry.signature != sig) continue;
    const Adjacency target = canonical_adjacency(entry.cls);
    Permutation p = kIdentity;
    do {
      bool match = true;
      for (int i = 0; i < 4 && match; ++i)
        for (int j = 0; j < 4 && match; ++j) match = g.adj[i][j] == target[p[i]][p[j]];
      if (match) return {entry.cls, p};
    } while (std::next_permutation(p.begin(), p.end()));
  }
  return {GraphClass::Other, std::nullopt};
}

/// Permanence verdict: det(A) = 0 and G_A has a directed cycle.
template <Scalar T>
struct ClassificationReport {
  SignDigraph graph;
  ClassLabel label;
  T pfaffian{};
  bool singular = false;
  bool permanent = false;
  /// "det_nonzero" or "no_cycle" when not permanent, else empty.
  std::string reason;
};

template <Scalar T>
ClassificationReport<T> classify_matrix(const PayoffMatrix<T>& a, double atol = 1e-12, double rtol = 1e-10) {
  ClassificationReport<T> r;
  r.graph = build_digraph(a, atol);
  r.label = classify(r.graph);
  r.pfaffian = pfaffian(a);
  r.singular = is_singular(a, rtol);
  if (r.singular && r.label.cls == GraphClass::Other)
    fail(ErrorKind::UnclassifiableSignPattern, "singular matrix with a cyclic sign pattern outside classes I-V");
  r.permanent = r.singular && has_cycle(r.graph);
  if (!r.singular)
    r.reason = "det_nonzero";
  else if (!r.permanent)
    r.reason = "no_cycle";
  return r;
}

}  // namespace replicator4
