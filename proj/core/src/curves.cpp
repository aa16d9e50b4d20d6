#include "imphopf/curves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imphopf/equilibria.hpp"

namespace imphopf {

namespace {

double chord_deviation(MuNu l, MuNu m, MuNu r) {
  const double dx = r.mu - l.mu;
  const double dy = r.nu - l.nu;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return std::hypot(m.mu - l.mu, m.nu - l.nu);
  return std::abs(dx * (m.nu - l.nu) - dy * (m.mu - l.mu)) / len;
}

void refine(const std::function<MuNu(double)>& f, double s0, MuNu p0, double s1, MuNu p1, int depth,
            const SampleOptions& opt, BifCurve& out) {
  const double sm = 0.5 * (s0 + s1);
  const MuNu pm = f(sm);
  // the quarter points guard against a symmetric bulge hiding the midpoint
  const MuNu q0 = f(0.5 * (s0 + sm));
  const MuNu q1 = f(0.5 * (sm + s1));
  const double dev = std::max({chord_deviation(p0, pm, p1), chord_deviation(p0, q0, pm), chord_deviation(pm, q1, p1)});
  if (depth < opt.max_depth && dev > opt.chord_tol) {
    refine(f, s0, p0, sm, pm, depth + 1, opt, out);
    refine(f, sm, pm, s1, p1, depth + 1, opt, out);
    return;
  }
  out.params.push_back(s1);
  out.samples.push_back(p1);
}

double cbrt_pos(double x) { return std::cbrt(x); }

}  // namespace

std::string to_string(CurveKind k) {
  switch (k) {
    case CurveKind::SNplus:
      return "SN+";
    case CurveKind::SNminus:
      return "SN-";
    case CurveKind::SN0:
      return "SN0";
    case CurveKind::Hplus:
      return "H+";
    case CurveKind::Hminus:
      return "H-";
    case CurveKind::H0:
      return "H0";
    case CurveKind::PFplus:
      return "PF+";
    case CurveKind::PFminus:
      return "PF-";
    case CurveKind::Parabola:
      return "parabola";
    case CurveKind::EllipseArc:
      return "ellipse";
    case CurveKind::Line:
      return "line";
  }
  return "?";
}

std::string to_string(Codim2Kind k) {
  switch (k) {
    case Codim2Kind::CuspPlus:
      return "Cusp+";
    case Codim2Kind::CuspMinus:
      return "Cusp-";
    case Codim2Kind::TBplus:
      return "TB+";
    case Codim2Kind::TBminus:
      return "TB-";
    case Codim2Kind::TB:
      return "TB";
    case Codim2Kind::dPFplus:
      return "dPF+";
    case Codim2Kind::dPFminus:
      return "dPF-";
  }
  return "?";
}

BifCurve sample_curve(CurveKind kind, const std::function<MuNu(double)>& f, double lo, double hi,
                      const SampleOptions& opt) {
  if (!(hi > lo)) throw std::invalid_argument("sample_curve: empty parameter interval");
  BifCurve c;
  c.kind = kind;
  c.param_lo = lo;
  c.param_hi = hi;
  constexpr int kCoarse = 16;
  double s0 = lo;
  MuNu p0 = f(lo);
  c.params.push_back(s0);
  c.samples.push_back(p0);
  for (int i = 1; i <= kCoarse; ++i) {
    const double s1 = i == kCoarse ? hi : lo + (hi - lo) * i / kCoarse;
    const MuNu p1 = f(s1);
    refine(f, s0, p0, s1, p1, 0, opt, c);
    s0 = s1;
    p0 = p1;
  }
  return c;
}

// ---------------------------------------------------------------------------

SNConstPoint sn_curve_const(double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("sn_curve_const: non-finite parameter");
  const double w = 1.0 + 3.0 * s * s;
  const double den = std::pow(2.0 * w, 2.0 / 3.0);
  SNConstPoint p;
  p.uv = {3.0 * (1.0 + s * s) / den, 2.0 * std::sqrt(3.0) * s / den};
  p.rho2 = cbrt_pos(w / 4.0);
  p.rho0 = std::pow(4.0 / w, 2.0 / 3.0);
  p.branch = s < -1.0 ? CurveKind::SNminus : (s > 1.0 ? CurveKind::SNplus : CurveKind::SN0);
  return p;
}

HopfConstPoint hopf_curve_const(double s, double alpha0) {
  if (!(std::abs(s) < 1.0)) throw std::invalid_argument("hopf_curve_const: parameter must satisfy |s| < 1");
  const double a = std::sin(alpha0);
  const double b = std::cos(alpha0);
  const double w = 1.0 - s * s;
  const double sw = std::sqrt(w);
  const double scale = cbrt_pos(a * w);
  HopfConstPoint h;
  h.location = {2.0 * scale, scale * (b / a + s / sw)};
  h.D = std::pow(a, 2.0 / 3.0) * std::pow(w, -1.0 / 3.0) * (2.0 * s * s - 1.0 - 2.0 * (b / a) * s * sw);
  h.valid = h.D > 0.0;
  h.branch = s < 0.0 ? CurveKind::Hminus : CurveKind::Hplus;
  return h;
}

Codim2ConstReport codim2_const(double alpha0) {
  const double a = std::sin(alpha0);
  const double b = std::cos(alpha0);
  const double r3 = std::sqrt(3.0);
  Codim2ConstReport rep;
  rep.points.push_back({Codim2Kind::CuspPlus, {1.5 * (a - b / r3), 1.5 * (b + a / r3)}, 1.0, false});
  rep.points.push_back({Codim2Kind::CuspMinus, {1.5 * (a + b / r3), 1.5 * (b - a / r3)}, -1.0, false});
  for (int delta : {+1, -1}) {
    const double den = cbrt_pos(2.0 * (1.0 + delta * b));
    const double s_tilde = delta * std::sqrt((1.0 - delta * b) / (3.0 * (1.0 + delta * b)));
    rep.points.push_back({delta > 0 ? Codim2Kind::TBplus : Codim2Kind::TBminus,
                          {2.0 * a / den, (2.0 * b + delta) / den},
                          s_tilde,
                          false});
  }
  const double s_minus = rep.points.back().curve_parameter;
  if (std::abs(s_minus + 1.0) <= 1e-12)
    rep.tb_minus_branch = TBMinusBranch::Cusp;
  else
    rep.tb_minus_branch = s_minus < -1.0 ? TBMinusBranch::SNminus : TBMinusBranch::SN0;
  return rep;
}

CurveSet curves_const(double alpha0, const SampleOptions& opt) {
  CurveSet set;
  auto sn = [alpha0](double s) { return from_uv(sn_curve_const(s).uv, alpha0); };
  const double smax = std::max(opt.extent, 1.5);
  set.curves.push_back(sample_curve(CurveKind::SNminus, sn, -smax, -1.0, opt));
  set.curves.push_back(sample_curve(CurveKind::SN0, sn, -1.0, 1.0, opt));
  set.curves.push_back(sample_curve(CurveKind::SNplus, sn, 1.0, smax, opt));

  const double b = std::cos(alpha0);
  auto hopf = [alpha0](double s) { return hopf_curve_const(s, alpha0).location; };
  // stop where |nu| reaches the plotting extent
  double s_end = 1.0 - 1e-6;
  for (double s = 0.5; s < 1.0; s = 0.5 * (s + 1.0)) {
    if (std::abs(hopf(s).nu) > opt.extent || std::abs(hopf(-s).nu) > opt.extent) {
      s_end = s;
      break;
    }
  }
  const double s_hm = -std::sqrt((1.0 - b) / 2.0);
  const double s_hp = std::sqrt((1.0 + b) / 2.0);
  if (-s_end < s_hm) set.curves.push_back(sample_curve(CurveKind::Hminus, hopf, -s_end, s_hm, opt));
  if (s_hp < s_end) set.curves.push_back(sample_curve(CurveKind::Hplus, hopf, s_hp, s_end, opt));
  set.points = codim2_const(alpha0).points;
  return set;
}

// ---------------------------------------------------------------------------

EllipseGeometry hopf_ellipse_z2(double alpha0) {
  const double a = std::sin(alpha0);
  const double a2 = a * a;
  const double root = std::sqrt(1.0 + 8.0 * a2);
  const double l_plus = 0.5 * (1.0 + 4.0 * a2 + root);
  const double l_minus = 0.5 * (1.0 + 4.0 * a2 - root);
  EllipseGeometry e;
  e.center = {0.0, 0.0};
  e.semi_major = 2.0 * a / std::sqrt(l_minus);
  e.semi_minor = 2.0 * a / std::sqrt(l_plus);
  e.eccentricity = std::sqrt(2.0 / (1.0 + (1.0 + 4.0 * a2) / root));
  return e;
}

CurveSet curves_z2(double alpha0, const SampleOptions& opt) {
  const double a = std::sin(alpha0);
  const double b = std::cos(alpha0);
  CurveSet set;
  auto circle = [](double th) { return MuNu{std::cos(th), std::sin(th)}; };
  set.curves.push_back(sample_curve(CurveKind::PFplus, circle, kPi - alpha0, 2.0 * kPi - alpha0, opt));
  set.curves.push_back(sample_curve(CurveKind::PFminus, circle, -alpha0, kPi - alpha0, opt));
  set.curves.push_back(
      sample_curve(CurveKind::SNplus, [alpha0](double u) { return from_uv({u, 1.0}, alpha0); }, 0.0, opt.extent, opt));
  set.curves.push_back(
      sample_curve(CurveKind::SNminus, [alpha0](double u) { return from_uv({u, -1.0}, alpha0); }, 0.0, opt.extent, opt));
  const double ext = std::max(opt.extent, 1.5);
  set.curves.push_back(sample_curve(CurveKind::Hplus, [](double nu) { return MuNu{0.0, nu}; }, 1.0, ext, opt));
  set.curves.push_back(sample_curve(CurveKind::Hminus, [](double nu) { return MuNu{0.0, nu}; }, -ext, -1.0, opt));
  const double nu_tb = (b * b - a * a) / a;
  auto arc = [a, b](double nu) {
    const double w = std::max(0.0, 1.0 - a * a * nu * nu);
    return MuNu{2.0 * a * b * nu + 2.0 * a * std::sqrt(w), nu};
  };
  set.curves.push_back(sample_curve(CurveKind::H0, arc, -1.0, nu_tb, opt));
  set.points.push_back({Codim2Kind::TBplus, {0.0, 1.0}});
  set.points.push_back({Codim2Kind::TBminus, {0.0, -1.0}});
  set.points.push_back({Codim2Kind::TB, {2.0 * b, nu_tb}});
  set.points.push_back({Codim2Kind::dPFplus, {-b, a}});
  set.points.push_back({Codim2Kind::dPFminus, {b, -a}});
  return set;
}

// ---------------------------------------------------------------------------

MuNu parabola_point(double v, double alpha0) { return from_uv({v * v - 0.25, v}, alpha0); }

CurveSet curves_quadratic(PerturbationKind kind, double alpha0, const SampleOptions& opt) {
  const PerturbationTag t = kind.tag();
  const bool z3 = t == PerturbationTag::ZmResidual && kind.m() == 3;
  if (!(t == PerturbationTag::Mixed || t == PerturbationTag::Quadratic || z3))
    throw std::invalid_argument("curves_quadratic: kind must be Mixed, Quadratic or ZmResidual(3)");
  const double a = std::sin(alpha0);
  const double b = std::cos(alpha0);
  CurveSet set;
  const double vmax = 0.5 * opt.extent;
  set.curves.push_back(
      sample_curve(CurveKind::Parabola, [alpha0](double v) { return parabola_point(v, alpha0); }, -vmax, vmax, opt));
  // Hopf of P0 on mu = 0, reaching the origin
  set.curves.push_back(sample_curve(CurveKind::Hplus, [](double nu) { return MuNu{0.0, nu}; }, 0.0, opt.extent, opt));
  set.curves.push_back(sample_curve(CurveKind::Hminus, [](double nu) { return MuNu{0.0, nu}; }, -opt.extent, 0.0, opt));

  if (t == PerturbationTag::Quadratic) {
    const double lo = -1.0 / (2.0 * (1.0 + b));
    const double hi = 1.0 / (2.0 * (1.0 - b));
    set.curves.push_back(sample_curve(CurveKind::H0, [](double nu) { return MuNu{0.0, nu}; }, lo, hi, opt));
    set.points.push_back({Codim2Kind::TBminus, {0.0, lo}, lo, true});
    set.points.push_back({Codim2Kind::TBplus, {0.0, hi}, hi, true});
  }
  if (z3 && alpha0 <= kPi / 6.0 + 1e-15) {
    double w = 1.0 - 4.0 * a * a;
    if (w < 1e-14) w = 0.0;
    const double sq = std::sqrt(w);
    auto tb = [&](double s) {
      return MuNu{(1.0 - 2.0 * a * a - s * b * sq) / a, sq * (b * sq - s * (1.0 - 2.0 * a * a)) / (2.0 * a * a)};
    };
    // ellipse (b mu - 2a nu)^2 + (a mu - 1)^2 = 1 as mu = (1 + cos th)/a,
    // nu = (b mu - sin th)/(2a)
    auto ell = [a, b](double th) {
      const double mu = (1.0 + std::cos(th)) / a;
      return MuNu{mu, (b * mu - std::sin(th)) / (2.0 * a)};
    };
    auto angle = [a, b](MuNu p) { return std::atan2(b * p.mu - 2.0 * a * p.nu, a * p.mu - 1.0); };
    const MuNu tp = tb(+1.0);
    const MuNu tm = tb(-1.0);
    double th_p = angle(tp);
    double th_m = angle(tm);
    set.points.push_back({Codim2Kind::TBplus, tp, th_p, false});
    set.points.push_back({Codim2Kind::TBminus, tm, th_m, false});
    if (w > 0.0) {
      // H0 is the arc on which P+ has T = 0, i.e. mu/(2a) - u - 1/2 >= 0
      auto on_h0 = [&](double th) {
        const MuNu p = ell(th);
        return p.mu / (2.0 * a) - (a * p.mu + b * p.nu) - 0.5 >= 0.0;
      };
      double lo = std::min(th_p, th_m);
      double hi = std::max(th_p, th_m);
      if (!on_h0(0.5 * (lo + hi))) {
        std::swap(lo, hi);
        hi += 2.0 * kPi;
      }
      set.curves.push_back(sample_curve(CurveKind::H0, ell, lo, hi, opt));
    }
  }
  return set;
}

CurveSet curves_for(PerturbationKind kind, double alpha0, const SampleOptions& opt) {
  switch (kind.tag()) {
    case PerturbationTag::Const:
      return curves_const(alpha0, opt);
    case PerturbationTag::ZmResidual:
      if (kind.m() == 2) return curves_z2(alpha0, opt);
      if (kind.m() == 3) return curves_quadratic(kind, alpha0, opt);
      break;
    case PerturbationTag::Mixed:
    case PerturbationTag::Quadratic:
      return curves_quadratic(kind, alpha0, opt);
    case PerturbationTag::None:
      break;
  }
  throw std::invalid_argument("curves_for: no closed-form curves for kind " + kind.name());
}

// ---------------------------------------------------------------------------

double pinning_width(PerturbationKind kind, double d, double epsilon) {
  if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("pinning_width: d must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("pinning_width: epsilon must be non-negative");
  const int p = kind.order();
  return 2.0 * epsilon * std::pow(d, 0.5 * (p - 1));
}

PinningBand measure_pinning_band(PerturbationKind kind, double d, double epsilon, double alpha0) {
  if (!(d > 0.0)) throw std::invalid_argument("measure_pinning_band: d must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("measure_pinning_band: epsilon must be positive");
  auto count = [&](double v) {
    const MuNu p = from_uv({d, v}, alpha0);
    ModelParams mp{p.mu, p.nu, alpha0, epsilon, kind};
    return fixed_points(mp).size();
  };
  const std::size_t inside = count(0.0);
  const double guess = std::max(0.5 * pinning_width(kind, d, epsilon), 1e-300);
  auto edge = [&](double sign) {
    double lo = 0.0;
    double hi = sign * guess;
    for (int i = 0; i < 200 && count(hi) == inside; ++i) {
      lo = hi;
      hi *= 2.0;
    }
    if (count(hi) == inside) throw std::runtime_error("measure_pinning_band: band edge not found");
    for (int i = 0; i < 200 && std::abs(hi - lo) > 1e-12 * std::abs(hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      if (count(mid) == inside)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  PinningBand band;
  band.v_upper = edge(+1.0);
  band.v_lower = edge(-1.0);
  return band;
}

double measure_pinning_width(PerturbationKind kind, double d, double epsilon, double alpha0) {
  return measure_pinning_band(kind, d, epsilon, alpha0).width();
}

HornBoundary zm_horn(int m, double epsilon, double u_lo, double u_hi, bool refine_samples, double alpha0,
                     int samples) {
  if (m < 4) throw std::invalid_argument("zm_horn: m must be at least 4");
  if (!(epsilon > 0.0)) throw std::invalid_argument("zm_horn: epsilon must be positive");
  if (!(u_hi > u_lo) || u_lo < 0.0) throw std::invalid_argument("zm_horn: need 0 <= u_lo < u_hi");
  if (samples < 2) throw std::invalid_argument("zm_horn: need at least two samples");
  const PerturbationKind kind = PerturbationKind::zm(m);
  HornBoundary h;
  h.upper.kind = CurveKind::SNplus;
  h.lower.kind = CurveKind::SNminus;
  for (BifCurve* c : {&h.upper, &h.lower}) {
    c->param_lo = u_lo;
    c->param_hi = u_hi;
  }
  for (int i = 0; i < samples; ++i) {
    const double u = u_lo + (u_hi - u_lo) * i / (samples - 1);
    double vu = epsilon * std::pow(u, 0.5 * (m - 2));
    double vl = -vu;
    if (refine_samples && u > 0.0) {
      const PinningBand band = measure_pinning_band(kind, u, epsilon, alpha0);
      vu = band.v_upper;
      vl = band.v_lower;
    }
    h.upper.params.push_back(u);
    h.upper.samples.push_back(from_uv({u, vu}, alpha0));
    h.lower.params.push_back(u);
    h.lower.samples.push_back(from_uv({u, vl}, alpha0));
  }
  return h;
}

}  // namespace imphopf
