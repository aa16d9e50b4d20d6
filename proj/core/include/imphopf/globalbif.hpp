#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "imphopf/flow.hpp"
#include "imphopf/normalform.hpp"

namespace imphopf {

// ---------------------------------------------------------------------------
// Period scaling near infinite-period boundaries.

enum class ScalingModel { SqrtLaw, LogLaw };

std::string to_string(ScalingModel m);

/// (parameter, period) with the parameter increasing away from the boundary.
struct PeriodSample {
  double mu = 0.0;
  double period = 0.0;
};

/// SqrtLaw: T = coeff / sqrt(mu - mu_c) + offset
/// LogLaw:  T = coeff * ln(1 / (mu - mu_c)) + offset   (coeff = 1/lambda)
struct PeriodScalingFit {
  ScalingModel model = ScalingModel::SqrtLaw;
  double mu_c = 0.0;
  double coeff = 0.0;
  double offset = 0.0;
  double rms_residual = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int iterations = 0;
  bool converged = false;

  double predict(double mu) const;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) over (mu_c, coeff, offset) with
/// mu_c = min(mu) - exp(theta) kept below the samples. The start is the best
/// point of a scan over mu_c on which (coeff, offset) are solved linearly.
/// Throws std::invalid_argument with fewer than 5 samples or non-positive
/// periods. Non-convergence within 200 iterations leaves converged = false
/// and returns the best iterate.
PeriodScalingFit fit_period_scaling(const std::vector<PeriodSample>& samples, ScalingModel model);

struct WindowFits {
  PeriodScalingFit near_sqrt, near_log, far_sqrt, far_log;
  std::size_t near_count = 0;
  std::size_t far_count = 0;
};

/// Splits the samples by distance to mu_c: the nearest `near_fraction`
/// and the farthest `far_fraction`, and fits both models on each window.
WindowFits fit_windows(const std::vector<PeriodSample>& samples, double mu_c, double near_fraction = 0.3,
                       double far_fraction = 0.5);

// ---------------------------------------------------------------------------
// Boundary location along a parameter path.

/// Straight path p(s) = start + s (end - start), s in [0, 1], in (mu, nu).
struct ParamPath {
  ModelParams base;
  MuNu start;
  MuNu end;

  ModelParams at(double s) const;
  double length() const;
};

enum class BoundaryType { SNIC, Homoclinic, Heteroclinic, CyclicFold, Undetermined };

std::string to_string(BoundaryType t);

struct BoundaryEvidence {
  bool period_diverges = false;
  std::optional<double> s_saddle_node;  ///< SN along the path, if any
  double sn_gap = 0.0;                  ///< |s_SN - s_c| * path length
  bool sqrt_dominates_near = false;
  bool sqrt_dominates_far = false;
  bool symmetric_saddles = false;       ///< saddle images are saddles too
  std::optional<double> saddle_lambda;  ///< unstable eigenvalue of the colliding saddle
  std::optional<WindowFits> fits;
};

struct BoundaryPoint {
  MuNu location;
  double s_lo = 0.0;  ///< last path parameter with a cycle
  double s_hi = 1.0;  ///< first path parameter without one
  MuNu bracket_lo;
  MuNu bracket_hi;
  double bracket_width = 0.0;  ///< in (mu, nu) distance
  bool converged = false;
  BoundaryType type_guess = BoundaryType::Undetermined;
  BoundaryEvidence evidence;
  /// Periods against the distance to the boundary along the path.
  std::vector<PeriodSample> periods;
  double horizon = 0.0;
};

struct BoundaryOptions {
  CycleOptions cycle;         ///< max_time is the per-probe budget
  double max_period = 1e4;    ///< longer cycles count as absent
  double bracket_tol = 1e-6;  ///< in (mu, nu) distance
  int max_bisections = 80;
  std::optional<State> seed;  ///< defaults to a point outside the cycle
  int period_samples = 24;    ///< log-spaced samples for the type guess
  double period_span = 0.2;   ///< farthest sample distance from the boundary
  bool classify = true;

  BoundaryOptions();
};

/// Cycle existence at path parameter s (Found with period <= max_period).
CycleSearch probe_cycle(const ParamPath& path, double s, const BoundaryOptions& opt, State seed);

/// Bisection on cycle existence. Throws std::invalid_argument if the start
/// of the path has no cycle. If the end still has a cycle the result has
/// converged = false and type Undetermined.
BoundaryPoint locate_boundary(const ParamPath& path, const BoundaryOptions& opt = {});

/// First change of the equilibrium count along the path, bisected to tol.
std::optional<double> locate_saddle_node(const ParamPath& path, double tol = 1e-12, int scan = 64);

/// Decision rules:
///  - no period divergence -> CyclicFold;
///  - SN within 2 bracket widths of the cycle loss and SqrtLaw better on
///    both windows -> SNIC;
///  - SN before the cycle loss (or none) with LogLaw better near the
///    boundary -> Homoclinic, Heteroclinic when the colliding saddle's
///    symmetry images are saddles as well;
///  - anything else -> Undetermined.
BoundaryType discriminate(const BoundaryPoint& boundary);

/// Fills evidence (periods, SN location, fits, saddle data) and the type.
void classify_boundary(const ParamPath& path, BoundaryPoint& bp, const BoundaryOptions& opt);

// ---------------------------------------------------------------------------

enum class GluingState { TwoSmallCycles, GluedLargeCycle, NoUnstableCycle };

std::string to_string(GluingState g);

struct GluingReport {
  GluingState state = GluingState::NoUnstableCycle;
  std::optional<LimitCycle> cycle;  ///< the unstable cycle found, if any
  int enclosed_equilibria = 0;
};

/// conj(z) case only. Reverse-time integration from next to P+: the
/// reversed-time attractor is the unstable cycle around P+ (small or glued)
/// or nothing (escape).
GluingReport gluing_probe(const ModelParams& params, const CycleOptions& opt = {});

// ---------------------------------------------------------------------------
// Degenerate Takens-Bogdanov point of the z^2 case.

/// Bivariate polynomial truncated at total degree kMaxDeg; c[i][j] multiplies
/// x^i y^j.
struct BiPoly {
  static constexpr int kMaxDeg = 3;
  std::array<std::array<double, kMaxDeg + 1>, kMaxDeg + 1> c{};

  double operator()(double x, double y) const;
  double& at(int i, int j) { return c[i][j]; }
  double at(int i, int j) const { return c[i][j]; }
  BiPoly degree_part(int k) const;
  BiPoly dx() const;
  BiPoly dy() const;
  friend BiPoly operator+(const BiPoly& a, const BiPoly& b);
  friend BiPoly operator-(const BiPoly& a, const BiPoly& b);
  friend BiPoly operator*(const BiPoly& a, const BiPoly& b);
  friend BiPoly operator*(double s, const BiPoly& a);
};

struct PolyField {
  BiPoly f;  ///< x-component
  BiPoly g;  ///< y-component
};

/// Coefficients of  x' = y,  y' = a2 x^2 + b2 x y + a3 x^3 + b3 x^2 y.
struct BTNormalForm {
  double a2 = 0.0;
  double b2 = 0.0;
  double a3 = 0.0;
  double b3 = 0.0;
};

/// Reduction of a field with linear part (y, 0) by near-identity
/// polynomial changes of variables, order by order. The homological
/// equations are solved in the minimum-norm sense (complement spanned by
/// (0, x^k) and (0, x^(k-1) y)).
BTNormalForm bt_normal_form(const PolyField& field);

/// The z^2 field translated to the equilibrium at TB- and rescaled into the
/// Jordan coordinates (x1, y1).
State degenerate_tb_field(double alpha0, State xy1);

struct DegenerateTBOptions {
  double radius = 1e-3;
  int fit_degree = 3;          ///< 2 or 3
  int rings = 12;
  int points_per_ring = 48;
  bool hamiltonian = true;
  Tolerances tol{1e-12, 1e-14};
};

struct DegenerateTBReport {
  double quadratic_coeff = 0.0;  ///< x^2 coefficient of y'
  double xy_coeff = 0.0;         ///< x y coefficient of y'
  double cubic_coeff = 0.0;      ///< x^3 coefficient of y'
  double fit_residual = 0.0;     ///< rms of the polynomial fit
  double linear_defect = 0.0;    ///< distance of the fitted linear part from (y, 0)
  double hamiltonian_residual = 0.0;
  double radius = 0.0;
  int fit_degree = 0;
};

/// Throws std::runtime_error when the least-squares fit is rank deficient.
DegenerateTBReport degenerate_tb_check(double alpha0, const DegenerateTBOptions& opt = {});

/// z^2 case at mu = 0 inside the parabola: largest return gap of orbits
/// around the centre P- after one revolution.
double hamiltonian_return_gap(double alpha0, Tolerances tol = {1e-12, 1e-14});

}  // namespace imphopf
