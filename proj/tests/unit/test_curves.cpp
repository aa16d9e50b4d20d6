#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "imphopf/curves.hpp"
#include "imphopf/equilibria.hpp"
#include "oracles.hpp"

using namespace imphopf;

namespace {

// Cubic of the constant case in rho = r^2: f = rho^3 - 2u rho^2 + (u^2 + v^2) rho - 1.
double cubic(UVPoint p, double r) { return r * r * r - 2 * p.u * r * r + (p.u * p.u + p.v * p.v) * r - 1; }
double cubic_d(UVPoint p, double r) { return 3 * r * r - 4 * p.u * r + p.u * p.u + p.v * p.v; }
double cubic_dd(UVPoint p, double r) { return 6 * r - 4 * p.u; }

ModelParams make(PerturbationKind k, MuNu mn, double alpha0 = kPi / 4, double eps = 1.0) {
  ModelParams p;
  p.kind = k;
  p.mu = mn.mu;
  p.nu = mn.nu;
  p.alpha0 = alpha0;
  p.epsilon = eps;
  return p;
}

const BifCurve& find_curve(const CurveSet& set, CurveKind k) {
  for (const auto& c : set.curves)
    if (c.kind == k) return c;
  throw std::runtime_error("curve missing: " + to_string(k));
}

const Codim2Point& find_point(const std::vector<Codim2Point>& pts, Codim2Kind k) {
  for (const auto& p : pts)
    if (p.kind == k) return p;
  throw std::runtime_error("point missing: " + to_string(k));
}

double angle_between(MuNu a, MuNu b) {
  const double c = std::abs(a.mu * b.mu + a.nu * b.nu) / (std::hypot(a.mu, a.nu) * std::hypot(b.mu, b.nu));
  return std::acos(std::min(1.0, c));
}

template <class F>
MuNu tangent(F f, double s, double h = 1e-6) {
  const MuNu p = f(s + h), m = f(s - h);
  return {(p.mu - m.mu) / (2 * h), (p.nu - m.nu) / (2 * h)};
}

// Smallest |T| + |D| over the equilibria at a parameter point.
double min_degeneracy(const ModelParams& p) {
  double best = INFINITY;
  for (const auto& e : fixed_points(p)) best = std::min(best, std::abs(e.T) + std::abs(e.D));
  return best;
}

bool has_hopf_equilibrium(const ModelParams& p, double tol) {
  for (const auto& e : fixed_points(p))
    if (std::abs(e.T) <= tol && e.D > 0) return true;
  return false;
}

}  // namespace

TEST(SNConst, CuspPoints) {
  for (double s : {1.0, -1.0}) {
    const SNConstPoint p = sn_curve_const(s);
    EXPECT_NEAR(p.uv.u, 1.5, 1e-14);
    EXPECT_NEAR(p.uv.v, s * std::sqrt(3.0) / 2, 1e-14);
    EXPECT_NEAR(p.rho2, 1.0, 1e-14);
    EXPECT_NEAR(cubic_dd(p.uv, p.rho2), 0.0, 1e-12);
  }
}

TEST(SNConst, OriginOfParameter) {
  const SNConstPoint p = sn_curve_const(0.0);
  EXPECT_NEAR(p.uv.u, 3 * std::pow(2.0, -2.0 / 3.0), 1e-14);
  EXPECT_NEAR(p.uv.v, 0.0, 1e-15);
  EXPECT_NEAR(p.rho2, std::cbrt(0.25), 1e-14);
}

TEST(SNConst, DoubleRootResidual) {
  for (double s : {-10.0, -3.0, -1.2, -0.4, 0.0, 0.3, 0.9, 2.5, 10.0}) {
    const SNConstPoint p = sn_curve_const(s);
    EXPECT_NEAR(cubic(p.uv, p.rho2), 0.0, 1e-10) << s;
    EXPECT_NEAR(cubic_d(p.uv, p.rho2), 0.0, 1e-10) << s;
    EXPECT_NEAR(cubic(p.uv, p.rho0), 0.0, 1e-10) << s;
    // the same cubic seen through the raw parameters
    const MuNu mn = from_uv(p.uv, 0.6);
    EXPECT_NEAR(cubic(to_uv(mn, 0.6), p.rho2), 0.0, 1e-10);
  }
}

TEST(SNConst, BranchOrdering) {
  for (double s : {-5.0, -1.5, -0.7, 0.0, 0.5, 1.1, 4.0}) {
    const SNConstPoint p = sn_curve_const(s);
    if (std::abs(s) < 1) {
      EXPECT_EQ(p.branch, CurveKind::SN0);
      EXPECT_LT(p.rho2, 1.0);
      EXPECT_GT(p.rho0, 1.0);
    } else {
      EXPECT_EQ(p.branch, s > 0 ? CurveKind::SNplus : CurveKind::SNminus);
      EXPECT_GT(p.rho2, 1.0);
      EXPECT_LT(p.rho0, 1.0);
    }
  }
}

TEST(SNConst, RejectsNonFinite) { EXPECT_THROW(sn_curve_const(NAN), std::invalid_argument); }

TEST(HopfConst, AsymptoticToAxis) {
  const double alpha0 = kPi / 4;
  double prev_p = 0, prev_m = 0;
  for (double d : {1e-3, 1e-6, 1e-9, 1e-12}) {
    const HopfConstPoint p = hopf_curve_const(1 - d, alpha0);
    const HopfConstPoint m = hopf_curve_const(-1 + d, alpha0);
    EXPECT_LT(p.location.mu, 3 * std::cbrt(d));
    EXPECT_LT(m.location.mu, 3 * std::cbrt(d));
    EXPECT_GT(p.location.nu, prev_p);
    EXPECT_LT(m.location.nu, prev_m);
    prev_p = p.location.nu;
    prev_m = m.location.nu;
  }
  EXPECT_GT(prev_p, 50);
  EXPECT_LT(prev_m, -50);
}

TEST(HopfConst, InvalidBetweenBranches) { EXPECT_FALSE(hopf_curve_const(0.0, kPi / 4).valid); }

TEST(HopfConst, ValidPointHasHopfEquilibrium) {
  const double alpha0 = kPi / 4;
  for (double s : {0.95, 0.99, -0.5, -0.9}) {
    const HopfConstPoint h = hopf_curve_const(s, alpha0);
    ASSERT_TRUE(h.valid) << s;
    EXPECT_TRUE(has_hopf_equilibrium(make(PerturbationKind::constant(), h.location, alpha0), 1e-9)) << s;
  }
}

TEST(HopfConst, RejectsOutOfRange) {
  EXPECT_THROW(hopf_curve_const(1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(hopf_curve_const(-1.5, 0.5), std::invalid_argument);
}

TEST(Codim2Const, TBMinusMeetsCuspAt60Degrees) {
  const auto rep = codim2_const(kPi / 3);
  const MuNu tb = find_point(rep.points, Codim2Kind::TBminus).location;
  const MuNu cusp = find_point(rep.points, Codim2Kind::CuspMinus).location;
  EXPECT_NEAR(tb.mu, cusp.mu, 1e-10);
  EXPECT_NEAR(tb.nu, cusp.nu, 1e-10);
  EXPECT_EQ(codim2_const(0.5).tb_minus_branch, TBMinusBranch::SNminus);
  EXPECT_EQ(codim2_const(1.3).tb_minus_branch, TBMinusBranch::SN0);
}

TEST(Codim2Const, TBPlusClosedFormAndDegeneracy) {
  const double alpha0 = kPi / 4, r2 = std::sqrt(2.0);
  const MuNu tb = find_point(codim2_const(alpha0).points, Codim2Kind::TBplus).location;
  const double den = std::cbrt(2 * (1 + r2 / 2));
  EXPECT_NEAR(tb.mu, r2 / den, 1e-14);
  EXPECT_NEAR(tb.nu, (r2 + 1) / den, 1e-14);
  EXPECT_LE(min_degeneracy(make(PerturbationKind::constant(), tb, alpha0)), 1e-9);
}

TEST(Codim2Const, CuspsOnSaddleNodeCurve) {
  for (double alpha0 : {0.2, 0.7, 1.2}) {
    const auto rep = codim2_const(alpha0);
    for (auto [k, s] : {std::pair{Codim2Kind::CuspPlus, 1.0}, std::pair{Codim2Kind::CuspMinus, -1.0}}) {
      const MuNu c = find_point(rep.points, k).location;
      const MuNu sn = from_uv(sn_curve_const(s).uv, alpha0);
      EXPECT_NEAR(c.mu, sn.mu, 1e-14);
      EXPECT_NEAR(c.nu, sn.nu, 1e-14);
    }
  }
}

TEST(Codim2Const, TBDegeneracyAllAngles) {
  for (double alpha0 : {0.2, 0.7, 1.2})
    for (Codim2Kind k : {Codim2Kind::TBplus, Codim2Kind::TBminus}) {
      const MuNu tb = find_point(codim2_const(alpha0).points, k).location;
      EXPECT_LE(min_degeneracy(make(PerturbationKind::constant(), tb, alpha0)), 1e-9);
    }
}

TEST(Codim2Const, SaddleNodeAndHopfTangentAtTB) {
  for (double alpha0 : {0.3, kPi / 4, 1.2}) {
    const double b = std::cos(alpha0);
    const auto pts = codim2_const(alpha0).points;
    auto sn = [alpha0](double s) { return from_uv(sn_curve_const(s).uv, alpha0); };
    auto hopf = [alpha0](double s) { return hopf_curve_const(s, alpha0).location; };
    for (int delta : {+1, -1}) {
      const Codim2Point& tb = find_point(pts, delta > 0 ? Codim2Kind::TBplus : Codim2Kind::TBminus);
      const double s_h = delta > 0 ? std::sqrt((1 + b) / 2) : -std::sqrt((1 - b) / 2);
      const MuNu h = hopf(s_h);
      EXPECT_NEAR(h.mu, tb.location.mu, 1e-12);
      EXPECT_NEAR(h.nu, tb.location.nu, 1e-12);
      const MuNu snp = sn(tb.curve_parameter);
      EXPECT_NEAR(snp.mu, tb.location.mu, 1e-12);
      EXPECT_NEAR(snp.nu, tb.location.nu, 1e-12);
      EXPECT_LE(angle_between(tangent(sn, tb.curve_parameter), tangent(hopf, s_h)), 1e-4) << alpha0 << " " << delta;
    }
  }
}

TEST(CurvesConst, SampleResiduals) {
  const CurveSet set = curves_const(kPi / 4);
  for (const auto& c : set.curves) {
    ASSERT_GE(c.samples.size(), 3u);
    for (std::size_t i = 1; i < c.params.size(); ++i) EXPECT_GT(c.params[i], c.params[i - 1]);
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      if (c.kind == CurveKind::Hplus || c.kind == CurveKind::Hminus) {
        EXPECT_GE(hopf_curve_const(c.params[i], kPi / 4).D, -1e-12);
      } else {
        const SNConstPoint p = sn_curve_const(c.params[i]);
        const UVPoint uv = to_uv(c.samples[i], kPi / 4);
        EXPECT_NEAR(cubic(uv, p.rho2), 0.0, 1e-10);
        EXPECT_NEAR(cubic_d(uv, p.rho2), 0.0, 1e-10);
      }
    }
  }
}

TEST(SampleCurve, ChordTolerance) {
  SampleOptions opt;
  opt.chord_tol = 1e-4;
  auto circle = [](double t) { return MuNu{std::cos(t), std::sin(t)}; };
  const BifCurve c = sample_curve(CurveKind::Line, circle, 0.0, 2 * kPi, opt);
  for (std::size_t i = 1; i < c.samples.size(); ++i) {
    const MuNu m = circle(0.5 * (c.params[i] + c.params[i - 1]));
    const MuNu l = c.samples[i - 1], r = c.samples[i];
    const double dx = r.mu - l.mu, dy = r.nu - l.nu;
    const double dev = std::abs((m.mu - l.mu) * dy - (m.nu - l.nu) * dx) / std::hypot(dx, dy);
    EXPECT_LE(dev, 1e-4);
  }
}

TEST(Z2Curves, EllipseGeometry) {
  for (double alpha0 : {0.3, kPi / 4, 1.1}) {
    const double a = std::sin(alpha0), b = std::cos(alpha0);
    auto on_ellipse = [&](MuNu p) { return p.mu * p.mu - 4 * a * b * p.mu * p.nu + 4 * a * a * p.nu * p.nu - 4 * a * a; };
    EXPECT_NEAR(on_ellipse({0, 1}), 0.0, 1e-14);
    EXPECT_NEAR(on_ellipse({0, -1}), 0.0, 1e-14);
    // tangency to SN- (v = -1) and SN+ (v = 1): ellipse gradient parallel to
    // the line normal (-b, a)
    for (double sign : {1.0, -1.0}) {
      const MuNu tb{sign * 2 * b, sign * (b * b - a * a) / a};
      EXPECT_NEAR(on_ellipse(tb), 0.0, 1e-12);
      const MuNu grad{2 * tb.mu - 4 * a * b * tb.nu, -4 * a * b * tb.mu + 8 * a * a * tb.nu};
      EXPECT_LE(angle_between(grad, {-b, a}), 1e-7);
      EXPECT_NEAR(to_uv(tb, alpha0).v, -sign, 1e-12);
    }

    const CurveSet set = curves_z2(alpha0);
    for (const MuNu& p : find_curve(set, CurveKind::H0).samples) EXPECT_NEAR(on_ellipse(p), 0.0, 1e-10);
  }
}

TEST(Z2Curves, EccentricityFromSemiaxes) {
  const EllipseGeometry e = hopf_ellipse_z2(kPi / 4);
  const double ratio = e.semi_minor / e.semi_major;
  EXPECT_NEAR(e.eccentricity, std::sqrt(1 - ratio * ratio), 1e-12);
  EXPECT_NEAR(2 / (e.eccentricity * e.eccentricity), 1 + 3 / std::sqrt(5.0), 1e-12);
}

TEST(Z2Curves, CodimTwoPoints) {
  const double alpha0 = 0.8, a = std::sin(alpha0), b = std::cos(alpha0);
  const CurveSet set = curves_z2(alpha0);
  for (Codim2Kind k : {Codim2Kind::TBplus, Codim2Kind::TBminus, Codim2Kind::TB})
    EXPECT_LE(min_degeneracy(make(PerturbationKind::zm(2), find_point(set.points, k).location, alpha0)), 1e-7)
        << to_string(k);
  for (auto [k, v] : {std::pair{Codim2Kind::dPFplus, 1.0}, std::pair{Codim2Kind::dPFminus, -1.0}}) {
    const MuNu p = find_point(set.points, k).location;
    EXPECT_NEAR(std::hypot(p.mu, p.nu), 1.0, 1e-14);
    EXPECT_NEAR(to_uv(p, alpha0).v, v, 1e-14);
  }
  EXPECT_NEAR(find_point(set.points, Codim2Kind::dPFplus).location.mu, -b, 1e-15);
  EXPECT_NEAR(find_point(set.points, Codim2Kind::dPFplus).location.nu, a, 1e-15);
}

TEST(Z2Curves, SampleResiduals) {
  const double alpha0 = 0.8;
  const CurveSet set = curves_z2(alpha0);
  for (const auto& c : set.curves) {
    for (std::size_t i = 1; i < c.params.size(); ++i) EXPECT_GT(c.params[i], c.params[i - 1]);
    for (const MuNu& p : c.samples) {
      switch (c.kind) {
        case CurveKind::PFplus:
        case CurveKind::PFminus:
          EXPECT_NEAR(std::hypot(p.mu, p.nu), 1.0, 1e-12);
          break;
        case CurveKind::SNplus:
          EXPECT_NEAR(to_uv(p, alpha0).v, 1.0, 1e-12);
          break;
        case CurveKind::SNminus:
          EXPECT_NEAR(to_uv(p, alpha0).v, -1.0, 1e-12);
          break;
        case CurveKind::Hplus:
        case CurveKind::Hminus:
          EXPECT_EQ(p.mu, 0.0);
          EXPECT_GE(std::abs(p.nu), 1.0);
          break;
        default:
          break;
      }
    }
  }
  // interior H0 samples carry an equilibrium with T = 0, D > 0
  const BifCurve& h0 = find_curve(set, CurveKind::H0);
  for (std::size_t i = 1; i + 1 < h0.samples.size(); i += 5)
    EXPECT_TRUE(has_hopf_equilibrium(make(PerturbationKind::zm(2), h0.samples[i], alpha0), 1e-8)) << i;
}

TEST(Z2Curves, PitchforkCircleRadiusIsEpsilon) {
  const CurveSet set = curves_z2(kPi / 4);
  for (double eps : {0.1, 0.02}) {
    for (const MuNu& p : find_curve(set, CurveKind::PFplus).samples) {
      ModelParams unit = make(PerturbationKind::zm(2), p);
      const ModelParams phys = restore_epsilon(unit, eps);
      EXPECT_NEAR(std::hypot(phys.mu, phys.nu), eps, 1e-14);
    }
  }
}

TEST(QuadraticCurves, ParabolaVertexAndResidual) {
  const MuNu v = parabola_point(0.0, 0.6);
  const UVPoint uv = to_uv(v, 0.6);
  EXPECT_NEAR(uv.u, -0.25, 1e-15);
  EXPECT_NEAR(uv.v, 0.0, 1e-15);
  for (PerturbationKind k : {PerturbationKind::mixed(), PerturbationKind::quadratic(), PerturbationKind::zm(3)}) {
    const CurveSet set = curves_quadratic(k, 0.6);
    const double a = std::sin(0.6), b = std::cos(0.6);
    for (const MuNu& p : find_curve(set, CurveKind::Parabola).samples)
      EXPECT_NEAR(a * p.mu + b * p.nu + 0.25 - std::pow(a * p.nu - b * p.mu, 2), 0.0, 1e-10);
    EXPECT_EQ(find_curve(set, CurveKind::Hplus).samples.front().nu, 0.0);
    EXPECT_EQ(find_curve(set, CurveKind::Hminus).samples.back().nu, 0.0);
  }
}

TEST(QuadraticCurves, QuadraticH0EndpointsOnParabola) {
  const double alpha0 = 0.6, a = std::sin(alpha0), b = std::cos(alpha0);
  const CurveSet set = curves_quadratic(PerturbationKind::quadratic(), alpha0);
  for (Codim2Kind k : {Codim2Kind::TBplus, Codim2Kind::TBminus}) {
    const Codim2Point& p = find_point(set.points, k);
    EXPECT_TRUE(p.degenerate);
    EXPECT_NEAR(a * p.location.mu + b * p.location.nu + 0.25 - std::pow(a * p.location.nu - b * p.location.mu, 2),
                0.0, 1e-14);
  }
  const BifCurve& h0 = find_curve(set, CurveKind::H0);
  for (std::size_t i = 1; i + 1 < h0.samples.size(); i += 3)
    EXPECT_TRUE(has_hopf_equilibrium(make(PerturbationKind::quadratic(), h0.samples[i], alpha0), 1e-8));
}

TEST(QuadraticCurves, Z3TangencyPointsCoalesceAt30Degrees) {
  const CurveSet set = curves_quadratic(PerturbationKind::zm(3), kPi / 6);
  const MuNu p = find_point(set.points, Codim2Kind::TBplus).location;
  const MuNu m = find_point(set.points, Codim2Kind::TBminus).location;
  EXPECT_NEAR(p.mu, m.mu, 1e-7);
  EXPECT_NEAR(p.nu, m.nu, 1e-7);
  EXPECT_FALSE(std::any_of(set.curves.begin(), set.curves.end(), [](auto& c) { return c.kind == CurveKind::H0; }));
  EXPECT_TRUE(curves_quadratic(PerturbationKind::zm(3), 1.0).points.empty());
}

TEST(QuadraticCurves, Z3TangencyPointsOnParabolaAndEllipse) {
  const double alpha0 = kPi / 8, a = std::sin(alpha0), b = std::cos(alpha0);
  const CurveSet set = curves_quadratic(PerturbationKind::zm(3), alpha0);
  auto ellipse = [&](MuNu q) { return std::pow(b * q.mu - 2 * a * q.nu, 2) + std::pow(a * q.mu - 1, 2) - 1; };
  auto parabola = [&](MuNu q) { return a * q.mu + b * q.nu + 0.25 - std::pow(a * q.nu - b * q.mu, 2); };
  for (Codim2Kind k : {Codim2Kind::TBplus, Codim2Kind::TBminus}) {
    const MuNu q = find_point(set.points, k).location;
    EXPECT_NEAR(ellipse(q), 0.0, 1e-10);
    EXPECT_NEAR(parabola(q), 0.0, 1e-10);
    EXPECT_LE(min_degeneracy(make(PerturbationKind::zm(3), q, alpha0)), 1e-7);
  }
  const BifCurve& h0 = find_curve(set, CurveKind::H0);
  for (const MuNu& q : h0.samples) EXPECT_NEAR(ellipse(q), 0.0, 1e-10);
  for (std::size_t i = 1; i + 1 < h0.samples.size(); i += 3)
    EXPECT_TRUE(has_hopf_equilibrium(make(PerturbationKind::zm(3), h0.samples[i], alpha0), 1e-8)) << i;
}

TEST(QuadraticCurves, RejectsOtherKinds) {
  EXPECT_THROW(curves_quadratic(PerturbationKind::constant(), 0.5), std::invalid_argument);
  EXPECT_THROW(curves_for(PerturbationKind::zm(5), 0.5), std::invalid_argument);
}

TEST(Pinning, Examples) {
  EXPECT_NEAR(pinning_width(PerturbationKind::constant(), 4, 0.1), 0.1, 1e-15);
  for (double d : {0.5, 1.0, 7.0}) EXPECT_NEAR(pinning_width(PerturbationKind::zm(2), d, 0.05), 0.1, 1e-15);
  EXPECT_NEAR(pinning_width(PerturbationKind::zm(5), 2, 0.01), 2 * 0.01 * std::pow(2.0, 1.5), 1e-15);
  EXPECT_NEAR(pinning_width(PerturbationKind::mixed(), 4, 0.1), 0.4, 1e-15);
  EXPECT_THROW(pinning_width(PerturbationKind::mixed(), 0, 0.1), std::invalid_argument);
  EXPECT_THROW(pinning_width(PerturbationKind::mixed(), -1, 0.1), std::invalid_argument);
}

// Band edges located independently: bisection on the equilibrium count along v.
TEST(Pinning, Z5WidthAgainstCountBisection) {
  const PerturbationKind k = PerturbationKind::zm(5);
  const double eps = 0.01, u = 2;
  auto count = [&](double v) { return fixed_points(make(k, from_uv({u, v}, kPi / 4), kPi / 4, eps)).size(); };
  auto edge = [&](double inside, double outside) {
    for (int i = 0; i < 100; ++i) {
      const double m = 0.5 * (inside + outside);
      (count(m) > 1 ? inside : outside) = m;
    }
    return 0.5 * (inside + outside);
  };
  const double w = edge(0, 1) - edge(0, -1);
  EXPECT_NEAR(w / pinning_width(k, u, eps), 1.0, 0.05);
  EXPECT_NEAR(measure_pinning_width(k, u, eps) / w, 1.0, 1e-9);
}

TEST(Pinning, WidthLaw) {
  for (PerturbationKind k : {PerturbationKind::constant(), PerturbationKind::zm(2), PerturbationKind::mixed(),
                             PerturbationKind::quadratic(), PerturbationKind::zm(3), PerturbationKind::zm(4),
                             PerturbationKind::zm(5)})
    for (double d : {1.0, 2.0, 4.0}) {
      const double w = measure_pinning_width(k, d, 0.05);
      EXPECT_NEAR(w / pinning_width(k, d, 0.05), 1.0, 0.05) << k.name() << " d=" << d;
    }
}

TEST(Horn, RejectsBadArguments) {
  EXPECT_THROW(zm_horn(3, 0.1, 0, 1, false), std::invalid_argument);
  EXPECT_THROW(zm_horn(5, 0.0, 0, 1, false), std::invalid_argument);
}

TEST(Horn, WedgeForM4) {
  const HornBoundary h = zm_horn(4, 0.03, 0.0, 2.0, false);
  for (std::size_t i = 0; i < h.upper.samples.size(); ++i) {
    const UVPoint up = to_uv(h.upper.samples[i], kPi / 4), lo = to_uv(h.lower.samples[i], kPi / 4);
    EXPECT_NEAR(up.v, 0.03 * up.u, 1e-14);
    EXPECT_NEAR(lo.v, -0.03 * lo.u, 1e-14);
  }
  const UVPoint first = to_uv(h.upper.samples.front(), kPi / 4);
  EXPECT_NEAR(first.u, 0.0, 1e-15);
  EXPECT_NEAR(first.v, 0.0, 1e-15);
}

TEST(Horn, RefinedZ5Boundary) {
  const HornBoundary h = zm_horn(5, 0.02, 0.5, 1.5, true, kPi / 4, 3);
  ASSERT_EQ(h.upper.samples.size(), 3u);
  const UVPoint up = to_uv(h.upper.samples[1], kPi / 4), lo = to_uv(h.lower.samples[1], kPi / 4);
  EXPECT_NEAR(up.u, 1.0, 1e-12);
  EXPECT_NEAR(up.v / 0.02, 1.0, 0.05);
  EXPECT_NEAR(-lo.v / 0.02, 1.0, 0.05);
}
