#include <gtest/gtest.h>

#include <random>

#include "ensembles.hpp"
#include "matrices.hpp"

using namespace replicator4;
using namespace fixtures;

namespace {

using FK = FaceOutcome::Kind;

const RegionResult& region(const BoundaryVerification& v, const std::string& name) {
  for (const auto& r : v.regions)
    if (r.region == name) return r;
  throw std::out_of_range(name);
}

BoundaryPrediction predict(const PayoffMatrix<Rational>& a) { return predict_boundary(a, classify_matrix(a).label); }

Vec<3> face_limit(const PayoffMatrix<Rational>& a, int face, const Vec<3>& y0, double t_end = 200) {
  return integrate<3>(face_subsystem(a.to_float(), face), y0, t_end).final_state();
}

}  // namespace

TEST(FaceSubsystem, Examples) {
  EXPECT_EQ(face_subsystem(m_i(), 0), (Matrix3<Rational>{{{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}}}));
  EXPECT_EQ(face_subsystem(m_iv(), 1), (Matrix3<Rational>{{{0, 0, 0}, {0, 0, -1}, {0, 1, 0}}}));
}

TEST(FaceSubsystem, AlwaysSkew) {
  std::mt19937_64 rng(51);
  for (int n = 0; n < 50; ++n) {
    const auto a = ensemble::cyclic_nonsingular(rng);
    for (int i = 0; i < 4; ++i) {
      const auto s = face_subsystem(a, i);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(s[r][c], -s[c][r]);
    }
  }
}

TEST(PredictEdge, FollowsTheFlowOnTheEdge) {
  EXPECT_EQ(predict_edge(m_i(), 1, 2), (EdgeOutcome{EdgeOutcome::Kind::ConvergeToVertex, 1}));
  EXPECT_EQ(predict_edge(m_v(), 0, 1), (EdgeOutcome{EdgeOutcome::Kind::AllEquilibria, -1}));
  EXPECT_EQ(predict_edge(m_iv(), 1, 2), (EdgeOutcome{EdgeOutcome::Kind::ConvergeToVertex, 2}));
}

TEST(PredictEdge, AgreesWithEdgeSimulation) {
  for (const auto* a : {&m_i(), &m_iv(), &m_v()})
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const auto p = predict_edge(*a, i, j);
        if (p.kind == EdgeOutcome::Kind::AllEquilibria) continue;
        const Mat<2> m{{{0, to_double((*a)(i, j))}, {to_double((*a)(j, i)), 0}}};
        const auto x = integrate<2>(m, {0.5, 0.5}, 200).final_state();
        EXPECT_GT(x[p.vertex == i ? 0 : 1], 1 - 1e-4) << i << j;
      }
}

TEST(PredictFace, Examples) {
  const auto iv0 = predict_face(m_iv(), classify_matrix(m_iv()).label, 0);
  EXPECT_EQ(iv0.kind, FK::PeriodicOrbits);
  const auto iv1 = predict_face(m_iv(), classify_matrix(m_iv()).label, 1);
  EXPECT_EQ(iv1.kind, FK::ConvergeToEdgePoint);
  EXPECT_EQ(iv1.edge, (std::pair{0, 3}));
  EXPECT_EQ(iv1.constraint.kind, FaceConstraint::Kind::CoordinatePreserved);
  EXPECT_EQ(iv1.constraint.coordinate, 0);
  const auto v2 = predict_face(m_v(), classify_matrix(m_v()).label, 2);
  EXPECT_EQ(v2.kind, FK::ConvergeToEdgePoint);
  EXPECT_EQ(v2.edge, (std::pair{0, 1}));
  EXPECT_EQ(v2.constraint.kind, FaceConstraint::Kind::IntervalMembership);
  EXPECT_EQ(v2.constraint.coordinate, 1);
  EXPECT_DOUBLE_EQ(v2.constraint.lower, 0.5);
  const auto i2 = predict_face(m_i(), classify_matrix(m_i()).label, 2);
  EXPECT_EQ(i2.kind, FK::ConvergeToVertex);
  EXPECT_EQ(i2.vertex, 3);
}

TEST(PredictFace, UnknownClass) {
  const auto acyclic = PayoffMatrix<Rational>::from_upper({Rational(1), 0, 0, 0, 0, 0});
  EXPECT_ERROR_KIND(predict_face(acyclic, classify(build_digraph(acyclic)), 0), UnknownClass);
  EXPECT_ERROR_KIND(predict_face(m_i(), ClassLabel{GraphClass::Other, std::nullopt}, 0), UnknownClass);
}

TEST(PredictFace, TableShapePerClass) {
  std::mt19937_64 rng(52);
  for (const auto& c : canonical_classes())
    for (int n = 0; n < 20; ++n) {
      const auto a = ensemble::class_matrix(c.cls, rng);
      const auto p = predict(a);
      std::map<FK, int> count;
      std::map<FaceConstraint::Kind, int> constraints;
      for (const auto& f : p.faces) {
        ++count[f.kind];
        if (f.kind == FK::ConvergeToEdgePoint) ++constraints[f.constraint.kind];
      }
      switch (c.cls) {
        case GraphClass::I:
          EXPECT_EQ(count[FK::PeriodicOrbits], 2);
          EXPECT_EQ(count[FK::ConvergeToVertex], 2);
          break;
        case GraphClass::II:
          EXPECT_EQ(count[FK::PeriodicOrbits], 2);
          EXPECT_EQ(count[FK::ConvergeToVertex], 1);
          EXPECT_EQ(constraints[FaceConstraint::Kind::RatioClaimed], 1);
          break;
        case GraphClass::III:
          EXPECT_EQ(count[FK::PeriodicOrbits], 1);
          EXPECT_EQ(count[FK::ConvergeToVertex], 1);
          EXPECT_EQ(constraints[FaceConstraint::Kind::IntervalMembership], 2);
          break;
        case GraphClass::IV:
          EXPECT_EQ(count[FK::PeriodicOrbits], 1);
          EXPECT_EQ(constraints[FaceConstraint::Kind::CoordinatePreserved], 3);
          break;
        case GraphClass::V: EXPECT_EQ(constraints[FaceConstraint::Kind::IntervalMembership], 4); break;
        default: FAIL();
      }
      for (const auto& f : p.faces)
        if (f.constraint.kind == FaceConstraint::Kind::IntervalMembership) {
          EXPECT_GT(f.constraint.lower, 0);
          EXPECT_LT(f.constraint.lower, 1);
        }
    }
}

TEST(FaceFlow, MIVCoordinatePreserved) {
  const auto y = face_limit(m_iv(), 1, {0.3, 0.35, 0.35});
  EXPECT_NEAR(y[0], 0.3, 1e-3);
  EXPECT_LE(y[1], 1e-4);
  EXPECT_NEAR(y[2], 0.7, 1e-3);
}

TEST(FaceFlow, MIFaceThreeGoesToVertexFour) {
  std::mt19937_64 rng(53);
  for (int n = 0; n < 10; ++n) EXPECT_GE(face_limit(m_i(), 2, random_start<3>(rng))[2], 1 - 1e-4);
}

TEST(FaceFlow, MVFaceThreeLandsAboveBound) {
  std::mt19937_64 rng(54);
  for (int n = 0; n < 20; ++n) {
    const auto y = face_limit(m_v(), 2, random_start<3>(rng));
    EXPECT_LE(y[2], 1e-4);
    EXPECT_GT(y[1], 0.5 - 1e-3);
  }
}

TEST(FaceFlow, BoundaryFaceStaysOnFace) {
  const auto y = integrate<3>(face_subsystem(m_i().to_float(), 0), {0.2, 0.3, 0.5}, 50);
  for (const auto& s : y.states()) EXPECT_NEAR(s[0] + s[1] + s[2], 1, 1e-12);
  const Vec<4> lifted = detail::lift_face(0, y.final_state());
  EXPECT_EQ(lifted[0], 0.0);
}

TEST(VerifyBoundary, CanonicalMatricesPass) {
  for (const auto* a : {&m_i(), &m_iv(), &m_v()}) {
    const auto v = verify_boundary(a->to_float(), predict(*a), 8, 200);
    for (const auto& r : v.regions) EXPECT_NE(r.status, RegionStatus::Fail) << r.region << ": " << r.detail;
    EXPECT_NO_THROW(require_boundary_verified(v));
    EXPECT_EQ(region(v, "equilibria").status, RegionStatus::Pass);
  }
}

TEST(VerifyBoundary, UnstableVerticesChecked) {
  const auto p = predict(m_iv());
  EXPECT_EQ(p.unstable_vertices, (std::vector<int>{1, 2, 3}));
  const auto v = verify_boundary(m_iv().to_float(), p, 2, 200);
  for (int k : {2, 3, 4}) EXPECT_EQ(region(v, "vertex:" + std::to_string(k)).status, RegionStatus::Pass);
}

TEST(VerifyBoundary, RatioClaimIsMeasuredOnly) {
  std::mt19937_64 rng(55);
  const auto a = ensemble::class_matrix(GraphClass::II, rng);
  const auto p = predict(a);
  const auto v = verify_boundary(a.to_float(), p, 8, 200);
  bool found = false;
  for (int i = 0; i < 4; ++i)
    if (p.faces[i].constraint.kind == FaceConstraint::Kind::RatioClaimed) {
      const auto& r = region(v, "face:-" + std::to_string(i + 1));
      EXPECT_EQ(r.status, RegionStatus::MeasuredOnly);
      EXPECT_FALSE(r.measured.empty());
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(VerifyBoundary, RandomClassIIIAndVMatricesPass) {
  std::mt19937_64 rng(56);
  for (GraphClass c : {GraphClass::III, GraphClass::V})
    for (int n = 0; n < 3; ++n) {
      const auto a = ensemble::class_matrix(c, rng);
      const auto v = verify_boundary(a.to_float(), predict(a), 6, 200);
      for (const auto& r : v.regions) EXPECT_NE(r.status, RegionStatus::Fail) << r.region << ": " << r.detail;
    }
}

TEST(VerifyBoundary, WrongPredictionIsReported) {
  auto p = predict(m_i());
  auto& e = p.edges[3];  // edge 2-3
  e.vertex = e.vertex == 1 ? 2 : 1;
  const auto v = verify_boundary(m_i().to_float(), p, 4, 200);
  EXPECT_EQ(region(v, "edge:2-3").status, RegionStatus::Fail);
  EXPECT_FALSE(v.all_passed());
  EXPECT_ERROR_KIND(require_boundary_verified(v), PredictionViolated);
}

TEST(VerifyBoundary, Deterministic) {
  const auto p = predict(m_v());
  const auto v1 = verify_boundary(m_v().to_float(), p, 4, 200);
  const auto v2 = verify_boundary(m_v().to_float(), p, 4, 200);
  ASSERT_EQ(v1.regions.size(), v2.regions.size());
  for (std::size_t k = 0; k < v1.regions.size(); ++k) EXPECT_EQ(v1.regions[k].measured, v2.regions[k].measured);
}
