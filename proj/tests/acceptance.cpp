// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ensembles.hpp"
#include "oracles.hpp"
#include "replicator4/replicator4.hpp"

using namespace replicator4;

namespace {

constexpr std::uint64_t kSeed = 0x5eed2024;
constexpr int kPerClass = 100;
constexpr std::array<GraphClass, 5> kClasses{GraphClass::I, GraphClass::II, GraphClass::III, GraphClass::IV,
                                             GraphClass::V};

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      if (notes.size() < 8) notes.push_back(why);
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

PayoffMatrix<Rational> load(const char* text) { return to_skew(parse_matrix(text)); }

const PayoffMatrix<Rational>& m_i() {
  static const auto m = load("0 1 1 -2 / -1 0 1 -1 / -1 -1 0 1 / 2 1 -1 0");
  return m;
}
const PayoffMatrix<Rational>& m_iv() {
  static const auto m = load("0 0 0 0 / 0 0 -1 1 / 0 1 0 -1 / 0 -1 1 0");
  return m;
}
const PayoffMatrix<Rational>& m_v() {
  static const auto m = load("0 0 1 -1 / 0 0 -1 1 / -1 1 0 0 / 1 -1 0 0");
  return m;
}

struct Named {
  const char* name;
  const PayoffMatrix<Rational>* a;
};

std::vector<Named> canonical_matrices() { return {{"M_I", &m_i()}, {"M_IV", &m_iv()}, {"M_V", &m_v()}}; }

const std::array<Vec<4>, 3> kStarts{{{0.1, 0.2, 0.3, 0.4}, {0.4, 0.3, 0.2, 0.1}, {0.15, 0.35, 0.3, 0.2}}};

struct ClassEnsemble {
  std::vector<std::pair<GraphClass, PayoffMatrix<Rational>>> items;
};

const ClassEnsemble& class_ensemble() {
  static const ClassEnsemble e = [] {
    ClassEnsemble out;
    std::mt19937_64 rng(kSeed);
    for (GraphClass c : kClasses)
      for (int k = 0; k < kPerClass; ++k) out.items.emplace_back(c, ensemble::class_matrix(c, rng));
    return out;
  }();
  return e;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  std::mt19937_64 rng(kSeed + 1);
  std::vector<PayoffMatrix<Rational>> mats;
  for (const auto& [c, a] : class_ensemble().items) mats.push_back(a);
  for (int k = 0; k < kPerClass; ++k) mats.push_back(ensemble::cyclic_nonsingular(rng));
  for (int k = 0; k < kPerClass; ++k) mats.push_back(ensemble::acyclic_singular(rng));

  IntegratorOptions opts;
  int agree = 0, perm = 0;
  double worst_perm = 1, worst_nonperm = 0;
  for (const auto& a : mats) {
    const auto cls = classify_matrix(a);
    const Mat<4> m = to_mat(a.to_float());
    bool sim_perm = true;
    double best_final = 1, worst_min = 1;
    for (int s = 0; s < 5; ++s) {
      const auto tr = integrate<4>(m, random_start<4>(rng), 200, opts);
      worst_min = std::min(worst_min, min_share(tr, 50));
      double fin = 1;
      for (double v : tr.final_state()) fin = std::min(fin, v);
      best_final = std::min(best_final, fin);
    }
    if (cls.permanent) {
      ++perm;
      sim_perm = worst_min >= 1e-3;
      worst_perm = std::min(worst_perm, worst_min);
    } else {
      sim_perm = !(best_final <= 1e-4);
      worst_nonperm = std::max(worst_nonperm, best_final);
    }
    if (sim_perm == cls.permanent)
      ++agree;
    else
      o.require(false, "disagreement on " + format_matrix(a.entries()) + " (graph says " +
                           (cls.permanent ? "permanent" : "not permanent") + ")");
  }
  o.summary = std::to_string(agree) + "/" + std::to_string(mats.size()) + " agree (" + std::to_string(perm) +
              " permanent); worst permanent min_share=" + fmt(worst_perm) +
              ", worst non-permanent min x(200)=" + fmt(worst_nonperm);
  return o;
}

Outcome criterion2() {
  Outcome o;
  double worst_residual = 0, worst_clip = 0;
  int n = 0;
  for (const auto& [c, a] : class_ensemble().items) {
    ++n;
    const auto cls = classify_matrix(a);
    o.require(cls.label.cls == c, "class mismatch");
    const auto s = kernel_line_section(a, cls.label);
    const auto af = a.to_float();
    std::array<SimplexLocus::Kind, 2> kinds{};
    for (int k = 0; k < 2; ++k) {
      const auto x = to_double_point(s.endpoints[k].x);
      worst_residual = std::max(worst_residual, residual_inf(af, x));
      kinds[k] = locus_of(s.endpoints[k].x).kind;
    }
    std::sort(kinds.begin(), kinds.end());
    using K = SimplexLocus::Kind;
    std::array<K, 2> want{};
    switch (c) {
      case GraphClass::I:
      case GraphClass::II: want = {K::FaceInterior, K::FaceInterior}; break;
      case GraphClass::III: want = {K::FaceInterior, K::EdgeInterior}; break;
      case GraphClass::IV: want = {K::FaceInterior, K::Vertex}; break;
      default: want = {K::EdgeInterior, K::EdgeInterior}; break;
    }
    std::sort(want.begin(), want.end());
    o.require(kinds == want, "loci do not match the class table");
    if (c == GraphClass::I || c == GraphClass::II)
      o.require(s.endpoints[0].locus.i != s.endpoints[1].locus.i, "I/II faces not distinct");
    if (c == GraphClass::IV)
      o.require(s.endpoints[0].locus.i == s.endpoints[1].locus.i, "IV vertex not opposite the face");
    if (c == GraphClass::V) {
      const auto& l0 = s.endpoints[0].locus;
      const auto& l1 = s.endpoints[1].locus;
      o.require(l0.i != l1.i && l0.i != l1.j && l0.j != l1.i && l0.j != l1.j, "V edges incident");
    }
    const auto sf = kernel_line_section(af, classify_matrix(af).label);
    const auto clipped = clip_null_line(af);
    o.require(clipped.has_value(), "clipping found no section");
    if (clipped) {
      auto d = [](const Point4<double>& u, const Point4<double>& v) {
        double m = 0;
        for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(u[i] - v[i]));
        return m;
      };
      const auto e0 = sf.endpoints[0].x, e1 = sf.endpoints[1].x;
      const double gap = std::min(std::max(d(e0, (*clipped)[0]), d(e1, (*clipped)[1])),
                                  std::max(d(e0, (*clipped)[1]), d(e1, (*clipped)[0])));
      worst_clip = std::max(worst_clip, gap);
    }
  }
  o.require(worst_residual <= 1e-10, "endpoint residual " + fmt(worst_residual));
  o.require(worst_clip <= 1e-10, "clip disagreement " + fmt(worst_clip));
  o.summary = std::to_string(n) + " matrices; max |Ax|inf=" + fmt(worst_residual) +
              ", max closed-form vs clipping gap=" + fmt(worst_clip);
  return o;
}

struct OrbitRun {
  std::string name;
  PayoffMatrix<double> af;
  Vec<4> x0;
  ReferencePair pair;
  OrbitReport report;
  double residual_loose = 0;
};

std::vector<OrbitRun>& orbit_runs(Outcome* o = nullptr) {
  static std::vector<OrbitRun> runs;
  static bool done = false;
  if (done) return runs;
  done = true;
  for (const auto& [name, a] : canonical_matrices()) {
    const auto af = a->to_float();
    const auto section = kernel_line_section(*a, classify_matrix(*a).label);
    for (const auto& x0 : kStarts) {
      OrbitRun r{name, af, x0, {}, {}, 0};
      try {
        OrbitOptions tight;
        r.pair = select_reference_points(af, section, x0, tight);
        r.report = detect_period(af, x0, r.pair, 200, tight);
        OrbitOptions loose;
        loose.integrator.rtol = 1e-8;
        ReferencePair p2 = r.pair;
        r.residual_loose = detect_period(af, x0, p2, 200, loose).closure_residual;
      } catch (const Error& e) {
        if (o) o->require(false, std::string(name) + ": " + e.what());
        r.report.period = 0;
      }
      runs.push_back(r);
    }
  }
  return runs;
}

Outcome criterion3() {
  Outcome o;
  double worst = 0;
  IntegratorOptions opts;
  opts.rtol = 1e-10;
  for (const auto& [name, a] : canonical_matrices()) {
    const auto af = a->to_float();
    const auto section = kernel_line_section(*a, classify_matrix(*a).label);
    for (const auto& x0 : kStarts) {
      const auto pair = select_reference_points(af, section, x0);
      const std::vector<Vec<4>> zs{pair.z_prime, pair.z_double_prime};
      const auto tr = integrate<4>(to_mat(af), x0, 100, opts, zs);
      for (double d : tr.drift()) worst = std::max(worst, d);
      for (const auto& z : zs) worst = std::max(worst, phi_drift(tr, z));
    }
  }
  o.require(worst <= 1e-8, "drift " + fmt(worst));
  o.summary = "9 runs, t in [0,100], rtol=1e-10: max phi drift=" + fmt(worst);
  return o;
}

Outcome criterion4() {
  Outcome o;
  auto& runs = orbit_runs(&o);
  double worst = 0;
  int certified = 0;
  for (const auto& r : runs) {
    if (r.report.period <= 0) continue;
    const bool ok = std::isfinite(r.report.period) && r.report.closure_residual <= 1e-6;
    certified += ok;
    o.require(ok, r.name + ": residual " + fmt(r.report.closure_residual));
    o.require(r.report.closure_residual <= r.residual_loose,
              r.name + ": residual grew when tightening rtol (" + fmt(r.residual_loose) + " -> " +
                  fmt(r.report.closure_residual) + ")");
    worst = std::max(worst, r.report.closure_residual);
  }
  o.require(certified == 9, "certified " + std::to_string(certified) + "/9");
  std::string periods;
  for (const auto& r : runs) periods += (periods.empty() ? "" : ",") + fmt(r.report.period);
  o.summary = std::to_string(certified) + "/9 certified; max closure residual=" + fmt(worst) + "; T=" + periods;
  return o;
}

Outcome criterion5() {
  Outcome o;
  double worst = 0;
  for (const auto& r : orbit_runs(&o)) {
    if (r.report.period <= 0) continue;
    worst = std::max(worst, r.report.avg_distance_to_K);
  }
  o.require(worst <= 1e-4, "distance " + fmt(worst));
  o.summary = "max avg_distance_to_K=" + fmt(worst);
  return o;
}

Outcome criterion6() {
  Outcome o;
  double tube = 0, vdrift = 0;
  int n = 0;
  for (auto& r : orbit_runs(&o)) {
    if (r.report.period <= 0) continue;
    try {
      const auto p = stability_probe(r.af, r.report, r.pair, 1e-3, 16, kSeed + n);
      tube = std::max(tube, p.max_tube_distance);
      vdrift = std::max(vdrift, p.V_drift);
    } catch (const Error& e) {
      o.require(false, r.name + ": " + e.what());
    }
    ++n;
  }
  o.require(tube <= 50 * 1e-3, "tube " + fmt(tube));
  o.require(vdrift <= 1e-8, "V drift " + fmt(vdrift));
  o.summary = std::to_string(n) + " orbits x 16 probes, delta=1e-3: max tube distance=" + fmt(tube) +
              " (limit 0.05), max V drift=" + fmt(vdrift);
  return o;
}

Outcome criterion7() {
  Outcome o;
  int regions = 0, measured = 0;
  for (const auto& [name, a] : canonical_matrices()) {
    const auto pred = predict_boundary(*a, classify_matrix(*a).label);
    BoundaryOptions bo;
    bo.seed = kSeed;
    const auto v = verify_boundary(a->to_float(), pred, 20, 200, bo);
    for (const auto& r : v.regions) {
      ++regions;
      measured += r.status == RegionStatus::MeasuredOnly;
      o.require(r.status != RegionStatus::Fail, std::string(name) + " " + r.region + ": " + r.detail);
    }
  }
  // A class II matrix exercises the measured-only ratio claim.
  std::mt19937_64 rng(kSeed + 7);
  const auto a2 = ensemble::class_matrix(GraphClass::II, rng);
  const auto v2 = verify_boundary(a2.to_float(), predict_boundary(a2, classify_matrix(a2).label), 20, 200);
  double ratio_dev = 0;
  for (const auto& r : v2.regions) {
    ++regions;
    o.require(r.status != RegionStatus::Fail, "class II " + r.region + ": " + r.detail);
    if (r.status == RegionStatus::MeasuredOnly) {
      ++measured;
      ratio_dev = r.measured.at("max_relative_ratio_deviation");
    }
  }
  o.summary = std::to_string(regions) + " regions over M_I, M_IV, M_V and one class II matrix; " +
              std::to_string(measured) + " measured-only (class II F-4 relative ratio deviation " + fmt(ratio_dev) +
              ")";
  return o;
}

Outcome criterion8() {
  Outcome o;
  int cyclic = 0, other = 0;
  std::array<int, 7> counts{};
  for (int code = 0; code < 729; ++code) {
    Adjacency adj{};
    int c = code;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const int s = c % 3 - 1;
        c /= 3;
        if (s > 0) adj[i][j] = true;
        if (s < 0) adj[j][i] = true;
      }
    try {
      const auto g = SignDigraph::from_adjacency(adj);
      const auto label = classify(g);
      ++counts[static_cast<int>(label.cls)];
      cyclic += has_cycle(g);
      other += label.cls == GraphClass::Other;
      Permutation p = kIdentity;
      do {
        const auto l2 = classify(g.relabeled(p));
        o.require(l2.cls == label.cls, "relabeling changed the class of pattern " + std::to_string(code));
      } while (std::next_permutation(p.begin(), p.end()));
      if (label.relabeling)
        o.require(g.relabeled(*label.relabeling).adj == canonical_adjacency(label.cls),
                  "relabeled edges differ from the canonical set");
    } catch (const std::exception& e) {
      o.require(false, "pattern " + std::to_string(code) + " aborted: " + e.what());
    }
  }
  o.summary = "729 patterns, " + std::to_string(cyclic) + " cyclic (I=" + std::to_string(counts[0]) +
              " II=" + std::to_string(counts[1]) + " III=" + std::to_string(counts[2]) +
              " IV=" + std::to_string(counts[3]) + " V=" + std::to_string(counts[4]) +
              " Other=" + std::to_string(other) + "), invariant under all 24 relabelings";
  return o;
}

Outcome criterion9() {
  Outcome o;
  double pf_gap = 0, ep_gap = 0;
  int n = 0;
  std::vector<PayoffMatrix<Rational>> mats;
  for (const auto& [name, a] : canonical_matrices()) mats.push_back(*a);
  for (const auto& [c, a] : class_ensemble().items) mats.push_back(a);
  for (const auto& a : mats) {
    ++n;
    const auto ex = classify_matrix(a);
    o.require(ex.pfaffian == 0, "exact pf not zero");
    o.require(oracle::det4(a.entries()) == ex.pfaffian * ex.pfaffian, "pf^2 != det");
    const auto sec = kernel_line_section(a, ex.label);
    for (const auto& ep : sec.endpoints) {
      for (const auto& r : apply(a, ep.x)) o.require(r == 0, "exact endpoint has nonzero residual");
      Rational s = 0;
      for (const auto& v : ep.x) s += v;
      o.require(s == 1, "exact endpoint not on the simplex");
    }
    const auto af = a.to_float();
    const auto fl = classify_matrix(af);
    o.require(fl.label.cls == ex.label.cls && fl.label.relabeling == ex.label.relabeling,
              "float classification differs");
    pf_gap = std::max(pf_gap, std::abs(fl.pfaffian - to_double(ex.pfaffian)));
    const auto sf = kernel_line_section(af, fl.label);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 4; ++i)
        ep_gap = std::max(ep_gap, std::abs(sf.endpoints[k].x[i] - to_double(sec.endpoints[k].x[i])));
  }
  o.require(pf_gap <= 1e-10, "pf gap " + fmt(pf_gap));
  o.require(ep_gap <= 1e-10, "endpoint gap " + fmt(ep_gap));
  o.summary = std::to_string(n) + " rational matrices: exact pf=0 and exact null endpoints; float vs exact: pf gap=" +
              fmt(pf_gap) + ", endpoint gap=" + fmt(ep_gap);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"permanence theorem (graph verdict vs simulation)", criterion1},
      {"kernel endpoints and loci", criterion2},
      {"invariant conservation", criterion3},
      {"periodicity", criterion4},
      {"time average in K", criterion5},
      {"stability", criterion6},
      {"boundary tables", criterion7},
      {"exhaustive sign-pattern scan", criterion8},
      {"exact mode", criterion9},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("aborted: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %zu: %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                o.summary.c_str(), secs);
    for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
