#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "ensembles.hpp"
#include "matrices.hpp"
#include "oracles.hpp"

using namespace replicator4;
using namespace fixtures;

namespace {

using EdgeList = std::vector<std::pair<int, int>>;

EdgeList sorted(EdgeList e) {
  std::sort(e.begin(), e.end());
  return e;
}

PayoffMatrix<Rational> pattern_matrix(int code) {
  std::array<Rational, 6> u;
  for (int k = 0; k < 6; ++k, code /= 3) u[k] = Rational(code % 3 - 1);
  return PayoffMatrix<Rational>::from_upper(u);
}

std::vector<Permutation> all_permutations() {
  std::vector<Permutation> out;
  Permutation p = kIdentity;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace

TEST(BuildDigraph, MV) {
  const auto g = build_digraph(m_v());
  EXPECT_EQ(sorted(g.edges()), sorted({{0, 2}, {2, 1}, {1, 3}, {3, 0}}));
  EXPECT_TRUE(g.three_cycles.empty());
  ASSERT_EQ(g.four_cycles.size(), 1u);
  EXPECT_EQ(g.four_cycles[0], (FourCycle{0, 2, 1, 3}));
}

TEST(BuildDigraph, MIV) {
  const auto g = build_digraph(m_iv());
  EXPECT_EQ(sorted(g.edges()), sorted({{2, 1}, {1, 3}, {3, 2}}));
  ASSERT_EQ(g.three_cycles.size(), 1u);
  EXPECT_EQ(g.three_cycles[0], (ThreeCycle{1, 3, 2}));
  EXPECT_TRUE(g.four_cycles.empty());
}

TEST(BuildDigraph, MIHasTwoTrianglesAndAHamiltonianCycle) {
  const auto g = build_digraph(m_i());
  EXPECT_EQ(sorted(g.edges()), sorted({{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 0}, {3, 1}}));
  auto three = g.three_cycles;
  std::sort(three.begin(), three.end());
  EXPECT_EQ(three, (std::vector<ThreeCycle>{{0, 2, 3}, {1, 2, 3}}));
  ASSERT_EQ(g.four_cycles.size(), 1u);
  EXPECT_EQ(g.four_cycles[0], (FourCycle{0, 1, 2, 3}));
}

TEST(BuildDigraph, FloatToleranceTreatsTinyEntriesAsZero) {
  Matrix4<double> m = m_iv().to_float().entries();
  m[0][1] = 1e-13;
  m[1][0] = -1e-13;
  const auto a = PayoffMatrix<double>::from_entries(m);
  EXPECT_EQ(build_digraph(a, 1e-12).edge_count(), 3);
  EXPECT_EQ(build_digraph(a, 1e-14).edge_count(), 4);
}

TEST(HasCycle, Examples) {
  EXPECT_TRUE(has_cycle(build_digraph(m_i())));
  EXPECT_TRUE(has_cycle(build_digraph(m_v())));
  const auto single = PayoffMatrix<Rational>::from_upper({Rational(1), 0, 0, 0, 0, 0});
  EXPECT_FALSE(has_cycle(build_digraph(single)));
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify(build_digraph(m_i())).cls, GraphClass::I);
  const auto iv = classify(build_digraph(m_iv()));
  EXPECT_EQ(iv.cls, GraphClass::IV);
  ASSERT_TRUE(iv.relabeling);
  EXPECT_EQ(*iv.relabeling, kIdentity);
  EXPECT_EQ(classify(build_digraph(m_v())).cls, GraphClass::V);
  EXPECT_EQ(classify(build_digraph(pattern_matrix(0))).cls, GraphClass::NoCycle);
}

TEST(Classify, CanonicalSignatures) {
  for (const auto& c : canonical_classes()) {
    const auto g = SignDigraph::from_adjacency(canonical_adjacency(c.cls));
    EXPECT_EQ(signature_of(g), c.signature) << to_string(c.cls);
    EXPECT_EQ(classify(g).cls, c.cls);
  }
}

TEST(SignPatterns, CycleDetectionAgreesWithReachabilityOracle) {
  for (int code = 0; code < 729; ++code) {
    if (code == 364) continue;  // all zero
    const auto g = build_digraph(pattern_matrix(code));
    EXPECT_EQ(has_cycle(g), oracle::has_cycle(g.adj)) << code;
  }
}

TEST(SignPatterns, RelabeledEdgeSetIsCanonical) {
  for (int code = 0; code < 729; ++code) {
    if (code == 364) continue;
    const auto g = build_digraph(pattern_matrix(code));
    const auto label = classify(g);
    if (!is_permanent_class(label.cls)) continue;
    ASSERT_TRUE(label.relabeling);
    EXPECT_EQ(g.relabeled(*label.relabeling).adj, canonical_adjacency(label.cls)) << code;
  }
}

TEST(SignPatterns, LabelInvariantUnderRelabeling) {
  const auto perms = all_permutations();
  for (int code = 0; code < 729; ++code) {
    if (code == 364) continue;
    const auto g = build_digraph(pattern_matrix(code));
    const GraphClass cls = classify(g).cls;
    for (const auto& p : perms) EXPECT_EQ(classify(g.relabeled(p)).cls, cls) << code;
  }
}

TEST(SignPatterns, OtherPatternsHaveSignDefinitePfaffian) {
  for (int code = 0; code < 729; ++code) {
    if (code == 364) continue;
    const auto a = pattern_matrix(code);
    if (classify(build_digraph(a)).cls != GraphClass::Other) continue;
    // Every magnitude assignment keeps the three Pfaffian terms of one sign.
    const auto u = a.upper();
    const std::array<Rational, 3> terms{u[0] * u[5], -u[1] * u[4], u[2] * u[3]};
    int pos = 0, neg = 0;
    for (const auto& t : terms) {
      if (t > 0) ++pos;
      if (t < 0) ++neg;
    }
    EXPECT_TRUE(pos == 0 || neg == 0) << code;
    EXPECT_GT(pos + neg, 0) << code;
  }
}

TEST(ClassifyMatrix, PermanenceVerdicts) {
  const auto iv = classify_matrix(m_iv());
  EXPECT_TRUE(iv.permanent);
  EXPECT_EQ(iv.label.cls, GraphClass::IV);
  const auto nz = classify_matrix(m_v_nonsingular());
  EXPECT_FALSE(nz.permanent);
  EXPECT_EQ(nz.reason, "det_nonzero");
  const auto acyclic = classify_matrix(PayoffMatrix<Rational>::from_upper({Rational(1), 0, 0, 0, 0, 0}));
  EXPECT_FALSE(acyclic.permanent);
  EXPECT_EQ(acyclic.reason, "no_cycle");
}

TEST(ClassifyMatrix, EnsemblesMatchTheirClass) {
  std::mt19937_64 rng(21);
  for (const auto& c : canonical_classes())
    for (int n = 0; n < 40; ++n) {
      const auto a = ensemble::class_matrix(c.cls, rng);
      const auto r = classify_matrix(a);
      EXPECT_TRUE(r.permanent);
      EXPECT_EQ(r.label.cls, c.cls);
      EXPECT_EQ(oracle::det4(a.entries()), Rational(0));
    }
  for (int n = 0; n < 40; ++n) {
    EXPECT_FALSE(classify_matrix(ensemble::cyclic_nonsingular(rng)).permanent);
    const auto acyclic = ensemble::acyclic_singular(rng);
    EXPECT_FALSE(classify_matrix(acyclic).permanent);
    EXPECT_FALSE(oracle::has_cycle(build_digraph(acyclic).adj));
  }
}
