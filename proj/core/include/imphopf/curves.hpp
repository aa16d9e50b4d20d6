#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "imphopf/normalform.hpp"

namespace imphopf {

enum class CurveKind { SNplus, SNminus, SN0, Hplus, Hminus, H0, PFplus, PFminus, Parabola, EllipseArc, Line };

enum class Codim2Kind { CuspPlus, CuspMinus, TBplus, TBminus, TB, dPFplus, dPFminus };

std::string to_string(CurveKind k);
std::string to_string(Codim2Kind k);

/// A sampled bifurcation curve in the (mu, nu) plane. `params[i]` is the
/// curve parameter of `samples[i]` and increases monotonically.
struct BifCurve {
  CurveKind kind = CurveKind::Line;
  std::vector<MuNu> samples;
  std::vector<double> params;
  double param_lo = 0.0;
  double param_hi = 0.0;
};

struct Codim2Point {
  Codim2Kind kind = Codim2Kind::TB;
  MuNu location;
  double curve_parameter = std::numeric_limits<double>::quiet_NaN();
  /// Degenerate Takens-Bogdanov points of the z^2 case.
  bool degenerate = false;
};

struct CurveSet {
  std::vector<BifCurve> curves;
  std::vector<Codim2Point> points;
};

struct SampleOptions {
  double chord_tol = 1e-4;  ///< max midpoint deviation from a chord
  int max_depth = 24;
  double extent = 4.0;      ///< truncation of unbounded curves (parameter units)
};

/// Adaptive sampling of a parametrized curve on [lo, hi]: intervals are
/// bisected until the curve midpoint is within chord_tol of the chord.
BifCurve sample_curve(CurveKind kind, const std::function<MuNu(double)>& f, double lo, double hi,
                      const SampleOptions& opt = {});

// ---------------------------------------------------------------------------
// Constant perturbation (epsilon = 1 units).

struct SNConstPoint {
  UVPoint uv;
  double rho2 = 0.0;  ///< double root
  double rho0 = 0.0;  ///< simple root
  CurveKind branch = CurveKind::SN0;
};

/// Saddle-node curve: SN- for s < -1, SN0 for |s| <= 1, SN+ for s > 1.
SNConstPoint sn_curve_const(double s);

struct HopfConstPoint {
  MuNu location;
  bool valid = false;  ///< D > 0, i.e. a genuine Hopf point
  double D = 0.0;
  CurveKind branch = CurveKind::Hminus;
};

/// Curve T = 0 of the equilibrium with r^2 = mu/(2a). Throws
/// std::invalid_argument for |s| >= 1.
HopfConstPoint hopf_curve_const(double s, double alpha0);

enum class TBMinusBranch { SNminus, SN0, Cusp };

struct Codim2ConstReport {
  std::vector<Codim2Point> points;  ///< Cusp+, Cusp-, TB+, TB-
  TBMinusBranch tb_minus_branch = TBMinusBranch::SNminus;
};

Codim2ConstReport codim2_const(double alpha0);

CurveSet curves_const(double alpha0, const SampleOptions& opt = {});

// ---------------------------------------------------------------------------
// conj(z) perturbation (epsilon = 1 units).

struct EllipseGeometry {
  MuNu center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double eccentricity = 0.0;
};

/// The Hopf ellipse mu^2 - 4ab mu nu + 4a^2 nu^2 = 4a^2 carrying H0.
EllipseGeometry hopf_ellipse_z2(double alpha0);

CurveSet curves_z2(double alpha0, const SampleOptions& opt = {});

// ---------------------------------------------------------------------------
// Quadratic perturbations (Mixed, Quadratic, ZmResidual(3); epsilon = 1).

/// Saddle-node parabola u = v^2 - 1/4 at parameter v.
MuNu parabola_point(double v, double alpha0);

CurveSet curves_quadratic(PerturbationKind kind, double alpha0, const SampleOptions& opt = {});

/// Dispatches on kind (Const, Z2, quadratic kinds). Throws for others.
CurveSet curves_for(PerturbationKind kind, double alpha0, const SampleOptions& opt = {});

// ---------------------------------------------------------------------------
// Pinning region geometry (physical epsilon).

/// Leading-order width w = 2 eps d^((p-1)/2) of the pinning band at distance
/// d along L. Throws std::invalid_argument for d <= 0.
double pinning_width(PerturbationKind kind, double d, double epsilon);

struct PinningBand {
  double v_lower = 0.0;
  double v_upper = 0.0;
  double width() const { return v_upper - v_lower; }
};

/// Transverse extent of the band at u = d, located by bisection on a change
/// of the equilibrium count along v (relative bracket 1e-12).
PinningBand measure_pinning_band(PerturbationKind kind, double d, double epsilon, double alpha0 = kPi / 4.0);

double measure_pinning_width(PerturbationKind kind, double d, double epsilon, double alpha0 = kPi / 4.0);

struct HornBoundary {
  BifCurve upper;
  BifCurve lower;
};

/// Boundaries v = +-eps u^((m-2)/2) of the Z_m pinning horn on [u_lo, u_hi],
/// m >= 4. With refine set, each sample is replaced by the bisected
/// boundary of the equilibrium set.
HornBoundary zm_horn(int m, double epsilon, double u_lo, double u_hi, bool refine, double alpha0 = kPi / 4.0,
                     int samples = 41);

}  // namespace imphopf
