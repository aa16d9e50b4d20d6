#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "imphopf/globalbif.hpp"
#include "oracles.hpp"

using namespace imphopf;

namespace {

ModelParams make(PerturbationKind k, double mu, double nu, double eps = 1.0, double alpha0 = kPi / 4) {
  ModelParams p;
  p.kind = k;
  p.mu = mu;
  p.nu = nu;
  p.epsilon = eps;
  p.alpha0 = alpha0;
  return p;
}

std::vector<PeriodSample> synthetic(ScalingModel m, double mu_c, double k, double c, std::vector<double> d,
                                    double noise = 0.0, std::mt19937_64* g = nullptr) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<PeriodSample> out;
  for (double x : d) {
    double T = (m == ScalingModel::SqrtLaw ? k / std::sqrt(x) : k * std::log(1 / x)) + c;
    if (g) T *= 1 + noise * N(*g);
    out.push_back({mu_c + x, T});
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return v;
}

void expect_monotone_periods(const BoundaryPoint& bp) {
  // periods sorted by distance: nearer samples have longer periods
  std::vector<PeriodSample> s = bp.periods;
  std::sort(s.begin(), s.end(), [](auto& a, auto& b) { return a.mu < b.mu; });
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i].period, s[i - 1].period + 1e-9) << i;
}

// The heteroclinic and SNIC boundaries are expensive; compute them once.
const BoundaryPoint& het_boundary() {
  static const BoundaryPoint bp = [] {
    ParamPath path{make(PerturbationKind::zm(2), 0, 0), {2.2, 0.6}, {2.0, 0.6}};
    return locate_boundary(path);
  }();
  return bp;
}

const BoundaryPoint& snic_boundary() {
  static const BoundaryPoint bp = [] {
    ParamPath path{make(PerturbationKind::zm(2), 0, 0), {3.0, 1.3}, {3.0, 1.7}};
    return locate_boundary(path);
  }();
  return bp;
}

}  // namespace

TEST(Fit, SyntheticSqrtLaw) {
  const auto s = synthetic(ScalingModel::SqrtLaw, 2.0, 5.0, 1.0, linspace(0.001, 0.2, 20));
  const PeriodScalingFit f = fit_period_scaling(s, ScalingModel::SqrtLaw);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.mu_c, 2.0, 1e-6);
  EXPECT_NEAR(f.coeff, 5.0, 1e-6);
  EXPECT_NEAR(f.offset, 1.0, 1e-6);
  EXPECT_LE(f.rms_residual, 1e-8);
  EXPECT_LT(f.mu_c, 2.001);
}

TEST(Fit, SyntheticLogLaw) {
  const auto s = synthetic(ScalingModel::LogLaw, 2.0, 3.0, 0.7, linspace(0.001, 0.2, 20));
  const PeriodScalingFit f = fit_period_scaling(s, ScalingModel::LogLaw);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.mu_c, 2.0, 1e-6);
  EXPECT_NEAR(f.coeff, 3.0, 1e-6);
  EXPECT_NEAR(f.offset, 0.7, 1e-6);
  EXPECT_NEAR(f.predict(2.01), 3.0 * std::log(100.0) + 0.7, 1e-5);
}

TEST(Fit, Errors) {
  auto s = synthetic(ScalingModel::SqrtLaw, 2.0, 5.0, 1.0, linspace(0.001, 0.2, 4));
  EXPECT_THROW(fit_period_scaling(s, ScalingModel::SqrtLaw), std::invalid_argument);
  s = synthetic(ScalingModel::SqrtLaw, 2.0, 5.0, 1.0, linspace(0.001, 0.2, 8));
  s[3].period = -1;
  EXPECT_THROW(fit_period_scaling(s, ScalingModel::LogLaw), std::invalid_argument);
  s[3].period = NAN;
  EXPECT_THROW(fit_period_scaling(s, ScalingModel::LogLaw), std::invalid_argument);
  EXPECT_THROW(fit_windows(synthetic(ScalingModel::LogLaw, 0, 1, 1, linspace(0.01, 1, 12)), 0.0), std::invalid_argument);
}

TEST(Fit, IdentifiabilityUnderNoise) {
  auto g = oracle::rng(51);
  const auto d = logspace(1e-4, 0.2, 24);
  for (ScalingModel truth : {ScalingModel::SqrtLaw, ScalingModel::LogLaw}) {
    const ScalingModel wrong = truth == ScalingModel::SqrtLaw ? ScalingModel::LogLaw : ScalingModel::SqrtLaw;
    int correct = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const double k = truth == ScalingModel::SqrtLaw ? 0.5 : 3.0;
      const auto s = synthetic(truth, 1.0, k, 2.0, d, 0.01, &g);
      correct += fit_period_scaling(s, truth).rms_residual < fit_period_scaling(s, wrong).rms_residual;
    }
    EXPECT_GE(correct, 190) << to_string(truth);
  }
}

TEST(Fit, WindowsSplitByDistance) {
  const auto s = synthetic(ScalingModel::SqrtLaw, 0.0, 1.0, 0.0, logspace(1e-4, 0.1, 20));
  const WindowFits w = fit_windows(s, 0.0);
  EXPECT_EQ(w.near_count, 6u);
  EXPECT_EQ(w.far_count, 10u);
  EXPECT_LE(w.near_sqrt.window_hi, w.far_sqrt.window_lo);
  EXPECT_LT(w.near_sqrt.rms_residual, w.near_log.rms_residual);
}

TEST(Boundary, HeteroclinicAtNu06) {
  const BoundaryPoint& bp = het_boundary();
  ASSERT_TRUE(bp.converged);
  EXPECT_NEAR(bp.location.mu, 2.01336, 1e-3);
  EXPECT_NEAR(bp.location.nu, 0.6, 1e-15);
  EXPECT_LE(bp.bracket_width, 1e-6);
  ASSERT_TRUE(bp.evidence.s_saddle_node.has_value());
  const double mu_sn = 2.2 - 0.2 * *bp.evidence.s_saddle_node;
  EXPECT_NEAR(mu_sn, 2.01420, 1e-3);
  EXPECT_GT(mu_sn, bp.location.mu);
  EXPECT_EQ(bp.type_guess, BoundaryType::Heteroclinic);
  EXPECT_TRUE(bp.evidence.symmetric_saddles);
  ASSERT_TRUE(bp.evidence.fits.has_value());
  const WindowFits& w = *bp.evidence.fits;
  EXPECT_LT(w.near_log.rms_residual, w.near_sqrt.rms_residual);
  EXPECT_GT(w.far_log.rms_residual, w.far_sqrt.rms_residual);
  expect_monotone_periods(bp);
}

TEST(Boundary, SaddleEigenvalueMatchesLogCoefficient) {
  const BoundaryPoint& bp = het_boundary();
  ASSERT_TRUE(bp.evidence.saddle_lambda.has_value());
  ASSERT_TRUE(bp.evidence.fits.has_value());
  // the cycle passes both saddles of the symmetric pair once per period
  const double saddles = bp.evidence.symmetric_saddles ? 2.0 : 1.0;
  EXPECT_NEAR(bp.evidence.fits->near_log.coeff * *bp.evidence.saddle_lambda / saddles, 1.0, 0.1);
  // independent saddle eigenvalue from the Jacobian at the saddles
  const ModelParams p = make(PerturbationKind::zm(2), bp.bracket_lo.mu, bp.bracket_lo.nu);
  double lam = 0;
  for (const auto& e : fixed_points(p))
    if (e.cls == StabilityClass::Saddle && e.label.kind != LabelKind::P0)
      lam = std::max({lam, e.eigenvalues[0].real(), e.eigenvalues[1].real()});
  EXPECT_NEAR(lam / *bp.evidence.saddle_lambda, 1.0, 1e-3);
}

TEST(Boundary, SnicAtMu3) {
  const BoundaryPoint& bp = snic_boundary();
  ASSERT_TRUE(bp.converged);
  EXPECT_EQ(bp.type_guess, BoundaryType::SNIC);
  ASSERT_TRUE(bp.evidence.s_saddle_node.has_value());
  const double nu_sn = 1.3 + 0.4 * *bp.evidence.s_saddle_node;
  EXPECT_LE(std::abs(nu_sn - bp.location.nu), 1e-5);
  EXPECT_LE(bp.evidence.sn_gap, 2 * bp.bracket_width);
  // independent SN location: count change of the grid oracle across the gap
  const auto below = oracle::grid_newton(make(PerturbationKind::zm(2), 3.0, nu_sn - 1e-6), 30);
  const auto above = oracle::grid_newton(make(PerturbationKind::zm(2), 3.0, nu_sn + 1e-6), 30);
  EXPECT_NE(below.size(), above.size());
  expect_monotone_periods(bp);
}

TEST(Boundary, CyclicFoldHasBoundedPeriod) {
  ParamPath path{make(PerturbationKind::zm(2), 0, 0), {0.5, -0.66}, {0.5, -0.65}};
  const BoundaryPoint bp = locate_boundary(path);
  ASSERT_TRUE(bp.converged);
  EXPECT_EQ(bp.type_guess, BoundaryType::CyclicFold);
  EXPECT_FALSE(bp.evidence.period_diverges);
  EXPECT_GT(bp.location.nu, -0.66);
  EXPECT_LT(bp.location.nu, -0.65);
}

TEST(Boundary, PinningEdgeApproachesLineAsEpsilonVanishes) {
  const double alpha0 = kPi / 4;
  for (double eps : {0.1, 0.03, 0.01}) {
    const ParamPath path{make(PerturbationKind::zm(2), 0, 0, eps), from_uv({1.0, 3 * eps}, alpha0),
                         from_uv({1.0, 0.0}, alpha0)};
    BoundaryOptions opt;
    opt.classify = false;
    opt.bracket_tol = 1e-6 * eps;
    const BoundaryPoint bp = locate_boundary(path, opt);
    ASSERT_TRUE(bp.converged) << eps;
    EXPECT_NEAR(to_uv(bp.location, alpha0).v / eps, 1.0, 0.01) << eps;
  }
  // at epsilon = 0 the boundary is L itself: on L every orbit settles
  const double a = std::sin(alpha0), b = std::cos(alpha0);
  const CycleSearch cs = find_limit_cycle(make(PerturbationKind::none(), 1.0, b / a, 0.0), State{0.3, 0.2});
  EXPECT_EQ(cs.status, CycleSearchStatus::FixedPoint);
  const CycleSearch off = find_limit_cycle(make(PerturbationKind::none(), 1.0, b / a + 0.1, 0.0), State{0.3, 0.2});
  EXPECT_EQ(off.status, CycleSearchStatus::Found);
}

TEST(Boundary, Errors) {
  ParamPath no_cycle{make(PerturbationKind::zm(2), 0, 0), {0.5, -0.6}, {0.5, -0.5}};
  EXPECT_THROW(locate_boundary(no_cycle), std::invalid_argument);
  ParamPath degenerate{make(PerturbationKind::zm(2), 0, 0), {1.6, 0.19}, {1.6, 0.19}};
  EXPECT_THROW(locate_boundary(degenerate), std::invalid_argument);
  // the cycle survives along the whole path
  ParamPath open{make(PerturbationKind::zm(2), 0, 0), {1.6, 0.19}, {1.7, 0.19}};
  BoundaryOptions opt;
  opt.classify = false;
  const BoundaryPoint bp = locate_boundary(open, opt);
  EXPECT_FALSE(bp.converged);
  EXPECT_EQ(bp.type_guess, BoundaryType::Undetermined);
}

TEST(Boundary, DiscriminateRules) {
  BoundaryPoint bp;
  bp.bracket_width = 1e-6;
  bp.horizon = 1e4;
  bp.evidence.period_diverges = false;
  EXPECT_EQ(discriminate(bp), BoundaryType::CyclicFold);
  bp.evidence.period_diverges = true;
  EXPECT_EQ(discriminate(bp), BoundaryType::Undetermined);  // no fits
  bp.evidence.fits = WindowFits{};
  bp.evidence.s_saddle_node = 0.5;
  bp.evidence.sn_gap = 1e-7;
  bp.evidence.sqrt_dominates_near = true;
  bp.evidence.sqrt_dominates_far = true;
  EXPECT_EQ(discriminate(bp), BoundaryType::SNIC);
  bp.evidence.sqrt_dominates_near = false;
  EXPECT_EQ(discriminate(bp), BoundaryType::Undetermined);
  bp.evidence.sn_gap = 1e-3;
  EXPECT_EQ(discriminate(bp), BoundaryType::Homoclinic);
  bp.evidence.symmetric_saddles = true;
  EXPECT_EQ(discriminate(bp), BoundaryType::Heteroclinic);
  bp.evidence.sqrt_dominates_near = true;
  EXPECT_EQ(discriminate(bp), BoundaryType::Undetermined);
}

TEST(Gluing, Sequence) {
  const GluingReport a = gluing_probe(make(PerturbationKind::zm(2), 0.5, -0.68));
  EXPECT_EQ(a.state, GluingState::TwoSmallCycles);
  EXPECT_EQ(a.enclosed_equilibria, 1);
  const GluingReport b = gluing_probe(make(PerturbationKind::zm(2), 0.5, -0.66));
  EXPECT_EQ(b.state, GluingState::GluedLargeCycle);
  EXPECT_EQ(b.enclosed_equilibria, 3);
  ASSERT_TRUE(b.cycle.has_value());
  EXPECT_EQ(b.cycle->stability, CycleStability::Unstable);
  const GluingReport c = gluing_probe(make(PerturbationKind::zm(2), 0.5, -0.65));
  EXPECT_EQ(c.state, GluingState::NoUnstableCycle);
  EXPECT_THROW(gluing_probe(make(PerturbationKind::mixed(), 0.5, -0.66)), std::invalid_argument);
}

TEST(BiPoly, Arithmetic) {
  BiPoly p, q;
  p.at(1, 0) = 2;  // 2x
  p.at(0, 1) = 1;  // + y
  q.at(0, 0) = 1;
  q.at(2, 0) = 3;  // 1 + 3x^2
  const BiPoly r = p * q;
  for (double x : {-0.3, 0.7})
    for (double y : {0.2, -1.1}) EXPECT_NEAR(r(x, y), (2 * x + y) * (1 + 3 * x * x), 1e-14);
  EXPECT_EQ(r.dx().at(2, 0), 18.0);
  EXPECT_EQ(r.dy().at(2, 0), 3.0);
  EXPECT_EQ(r.degree_part(3).at(3, 0), 6.0);
  EXPECT_EQ(r.degree_part(3).at(1, 0), 0.0);
  // truncation at total degree 3
  const BiPoly s = r * r;
  EXPECT_NEAR(s(0.1, 0.0), 4 * 0.01 + 0, 1e-14 + 12 * 1e-3);
  EXPECT_EQ(s.at(3, 0), 0.0);
}

TEST(BTNormalForm, KnownReductions) {
  // x' = y + x^2, y' = 0: b2 = 2 a20
  PolyField f;
  f.f.at(0, 1) = 1;
  f.f.at(2, 0) = 1;
  BTNormalForm nf = bt_normal_form(f);
  EXPECT_NEAR(nf.a2, 0.0, 1e-14);
  EXPECT_NEAR(nf.b2, 2.0, 1e-14);
  // already in normal form: unchanged
  PolyField g;
  g.f.at(0, 1) = 1;
  g.g.at(2, 0) = 1.5;
  g.g.at(1, 1) = -0.5;
  g.g.at(3, 0) = 2.0;
  g.g.at(2, 1) = 0.25;
  nf = bt_normal_form(g);
  EXPECT_NEAR(nf.a2, 1.5, 1e-14);
  EXPECT_NEAR(nf.b2, -0.5, 1e-14);
  EXPECT_NEAR(nf.a3, 2.0, 1e-14);
  EXPECT_NEAR(nf.b3, 0.25, 1e-14);
  // x' = y + x y, y' = x^2: the x y term of the first row does not enter b2
  PolyField h;
  h.f.at(0, 1) = 1;
  h.f.at(1, 1) = 1;
  h.g.at(2, 0) = 1;
  nf = bt_normal_form(h);
  EXPECT_NEAR(nf.a2, 1.0, 1e-14);
  EXPECT_NEAR(nf.b2, 0.0, 1e-14);
}

TEST(DegenerateTB, CoefficientsAtThreeAngles) {
  for (double deg : {30.0, 45.0, 60.0}) {
    const double alpha0 = deg * kPi / 180, c = std::cos(alpha0 / 2);
    const DegenerateTBReport r = degenerate_tb_check(alpha0);
    EXPECT_NEAR(r.quadratic_coeff / (4 * c), 1.0, 1e-3) << deg;
    EXPECT_NEAR(r.cubic_coeff / (16 * c * c), 1.0, 1e-3) << deg;
    EXPECT_LE(std::abs(r.xy_coeff), 1e-6) << deg;
    EXPECT_LE(r.linear_defect, 1e-6);
    EXPECT_LE(r.hamiltonian_residual, 1e-6);
  }
}

TEST(DegenerateTB, SmallAngleLimit) {
  const DegenerateTBReport r = degenerate_tb_check(1e-4);
  EXPECT_NEAR(r.quadratic_coeff, 4.0, 1e-3);
  EXPECT_NEAR(r.cubic_coeff, 16.0, 1e-2);
  EXPECT_LE(std::abs(r.xy_coeff), 1e-6);
}

TEST(DegenerateTB, ConvergesWithRadius) {
  // A quadratic fit of the cubic field aliases the cubic terms into the
  // linear part; that error must shrink with the disc radius.
  const double alpha0 = kPi / 4, c = std::cos(alpha0 / 2);
  std::vector<double> err;
  for (double radius : {4e-2, 2e-2, 1e-2, 5e-3}) {
    DegenerateTBOptions opt;
    opt.radius = radius;
    opt.fit_degree = 2;
    opt.hamiltonian = false;
    const DegenerateTBReport r = degenerate_tb_check(alpha0, opt);
    err.push_back(r.linear_defect + std::abs(r.quadratic_coeff - 4 * c) + std::abs(r.xy_coeff));
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.0);
}

TEST(DegenerateTB, ClosedOrbitsReturn) {
  for (double deg : {30.0, 45.0, 60.0}) EXPECT_LE(hamiltonian_return_gap(deg * kPi / 180), 1e-6);
}

TEST(DegenerateTB, FieldVanishesAtOrigin) {
  for (double alpha0 : {0.3, 1.0}) EXPECT_LE(degenerate_tb_field(alpha0, State{0, 0}).norm(), 1e-13);
}

TEST(DegenerateTB, Errors) {
  EXPECT_THROW(degenerate_tb_check(0.0), std::invalid_argument);
  DegenerateTBOptions opt;
  opt.fit_degree = 4;
  EXPECT_THROW(degenerate_tb_check(0.5, opt), std::invalid_argument);
  opt.fit_degree = 3;
  opt.rings = 1;
  opt.points_per_ring = 4;
  EXPECT_THROW(degenerate_tb_check(0.5, opt), std::runtime_error);
}
