#pragma once

// Perturbed normal forms of the zero-frequency Hopf bifurcation with SO(2)
// symmetry:
//
//     dz/dt = z (mu + i nu - c |z|^2) + epsilon * g(z, conj z),
//     c = sin(alpha0) + i cos(alpha0),
//
// where g is one symmetry-breaking monomial selected by PerturbationKind.

#include <array>
#include <complex>
#include <string>

namespace imphopf {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

enum class PerturbationTag { None, Const, Mixed, Quadratic, ZmResidual };

/// The symmetry-breaking monomial.
///   Const        -> 1
///   Mixed        -> z conj(z)
///   Quadratic    -> z^2
///   ZmResidual m -> conj(z)^(m-1), m >= 2   (m=2 is the conj(z) case)
class PerturbationKind {
 public:
  constexpr PerturbationKind() = default;

  static constexpr PerturbationKind none() { return PerturbationKind(PerturbationTag::None, 0); }
  static constexpr PerturbationKind constant() { return PerturbationKind(PerturbationTag::Const, 0); }
  static constexpr PerturbationKind mixed() { return PerturbationKind(PerturbationTag::Mixed, 0); }
  static constexpr PerturbationKind quadratic() { return PerturbationKind(PerturbationTag::Quadratic, 0); }
  /// Throws std::invalid_argument for m < 2.
  static PerturbationKind zm(int m);

  constexpr PerturbationTag tag() const { return tag_; }
  /// Symmetry order m of ZmResidual(m), 0 for every other kind.
  constexpr int m() const { return m_; }

  /// Total degree p of the monomial z^q conj(z)^(p-q). Throws for None.
  int order() const;

  /// Order of the rotation group the perturbed field still commutes with
  /// (1 when no rotation survives, 0 for full SO(2)).
  int symmetry_order() const;

  std::string name() const;

  friend constexpr bool operator==(PerturbationKind, PerturbationKind) = default;

 private:
  constexpr PerturbationKind(PerturbationTag tag, int m) : tag_(tag), m_(m) {}

  PerturbationTag tag_ = PerturbationTag::None;
  int m_ = 0;
};

struct ModelParams {
  double mu = 0.0;
  double nu = 0.0;
  double alpha0 = kPi / 4.0;  ///< radians, open interval (0, pi/2)
  double epsilon = 0.0;
  PerturbationKind kind = PerturbationKind::none();

  double a() const;  ///< sin(alpha0)
  double b() const;  ///< cos(alpha0)
  Complex c() const { return {a(), b()}; }

  /// Throws std::invalid_argument when a field is non-finite or out of range.
  void validate() const;
};

/// A point of the phase plane, z = x + i y. Also used for velocities.
struct State {
  double x = 0.0;
  double y = 0.0;

  static State from_complex(Complex z) { return {z.real(), z.imag()}; }
  static State from_polar(double r, double phi);

  Complex complex() const { return {x, y}; }
  double r() const;
  /// Phase in [0, 2 pi).
  double phi() const;
  double norm() const { return r(); }

  friend State operator+(State p, State q) { return {p.x + q.x, p.y + q.y}; }
  friend State operator-(State p, State q) { return {p.x - q.x, p.y - q.y}; }
  friend State operator*(double s, State p) { return {s * p.x, s * p.y}; }
  friend bool operator==(State, State) = default;
};

double distance(State p, State q);

/// Row-major 2x2 real matrix.
struct Matrix2 {
  std::array<double, 4> m{};

  double operator()(int i, int j) const { return m[2 * i + j]; }
  double& operator()(int i, int j) { return m[2 * i + j]; }
  double trace() const { return m[0] + m[3]; }
  double det() const { return m[0] * m[3] - m[1] * m[2]; }
};

struct PolarRate {
  double r_dot = 0.0;
  double phi_dot = 0.0;
};

struct UVPoint {
  double u = 0.0;
  double v = 0.0;
};

struct MuNu {
  double mu = 0.0;
  double nu = 0.0;
};

/// Vector field in Cartesian components. Throws std::domain_error on
/// non-finite input.
State rhs(const ModelParams& params, State state);
Complex rhs(const ModelParams& params, Complex z);

/// Analytic Jacobian d(rhs)/d(x, y).
Matrix2 jacobian(const ModelParams& params, State state);

/// (dr/dt, dphi/dt) from the explicit polar equations of each kind. Below
/// r = 1e-9 the radius in the 1/r term of the Const case is clamped to 1e-9.
PolarRate polar_rhs(const ModelParams& params, double r, double phi);

/// Rotation of the parameter plane by alpha0; the zero-frequency line L of
/// the symmetric system becomes v = 0.
UVPoint to_uv(MuNu p, double alpha0);
UVPoint to_uv(const ModelParams& params);
MuNu from_uv(UVPoint uv, double alpha0);

/// Removal of epsilon by the similarity scaling
///     (z, t, mu, nu) -> (eps^d z, eps^-2d t, eps^2d mu, eps^2d nu),
///     d = 1 / (3 - p).
struct EpsilonScaling {
  double delta = 0.0;
  double z_scale = 1.0;      ///< eps^delta: z = z_scale * z_unit
  double t_scale = 1.0;      ///< eps^-2delta: t = t_scale * t_unit
  double param_scale = 1.0;  ///< eps^2delta: (mu, nu) = param_scale * (mu_unit, nu_unit)
  ModelParams normalized;    ///< equivalent system with epsilon = 1
};

/// Throws std::invalid_argument for kind None or epsilon <= 0 and
/// std::domain_error for Z_4 (p = 3, where epsilon cannot be scaled out).
EpsilonScaling rescale_epsilon(const ModelParams& params);

/// Inverse of rescale_epsilon: the epsilon-system equivalent to a unit system.
ModelParams restore_epsilon(const ModelParams& unit_params, double epsilon);

/// Maps states of the unit system to the epsilon system and back.
State to_unit_state(const EpsilonScaling& scaling, State s);
State from_unit_state(const EpsilonScaling& scaling, State s);

/// Sign reductions bringing an arbitrary tilt c = a + i b (|c| = 1) into the
/// open quadrant a, b > 0.
///  - time reversal with (mu, nu) -> (-mu, -nu) flips the signs of a and b;
///  - conjugation (phi, nu) -> (-phi, -nu) flips the sign of b.
struct SignTransform {
  double alpha0 = 0.0;
  bool time_reversed = false;
  bool conjugated = false;
};

/// Throws std::invalid_argument if a_raw or b_raw is zero or |c| != 1.
SignTransform canonicalize_signs(double a_raw, double b_raw);

/// Parameters of the canonical system equivalent to the raw system with
/// unfolding parameters (mu, nu) and tilt (a_raw, b_raw).
ModelParams canonical_params(const SignTransform& t, double mu, double nu, double epsilon,
                             PerturbationKind kind);

/// Maps a raw-system state into canonical coordinates. Time reversal also
/// flips the sign of epsilon, which is undone by a rotation of pi / k where k
/// is the phase weight of the monomial (a pure rotation of z).
State canonical_state(const SignTransform& t, PerturbationKind kind, State raw);
State raw_state(const SignTransform& t, PerturbationKind kind, State canonical);

}  // namespace imphopf
