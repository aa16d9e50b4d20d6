#include "imphopf/normalform.hpp"

#include <cmath>
#include <stdexcept>

namespace imphopf {

namespace {

bool finite(State s) { return std::isfinite(s.x) && std::isfinite(s.y); }

// Integer power of a complex number; the exponents here are small.
Complex ipow(Complex z, int n) {
  Complex out{1.0, 0.0};
  for (int i = 0; i < n; ++i) out *= z;
  return out;
}

// Phase weight k of the monomial: rotating z by theta multiplies the
// perturbation term by exp(i k theta).
int phase_weight(PerturbationKind kind) {
  switch (kind.tag()) {
    case PerturbationTag::Const:
    case PerturbationTag::Mixed:
      return 1;
    case PerturbationTag::Quadratic:
      return -1;
    case PerturbationTag::ZmResidual:
      return kind.m();
    case PerturbationTag::None:
      break;
  }
  return 0;
}

}  // namespace

PerturbationKind PerturbationKind::zm(int m) {
  if (m < 2) throw std::invalid_argument("ZmResidual requires m >= 2");
  return PerturbationKind(PerturbationTag::ZmResidual, m);
}

int PerturbationKind::order() const {
  switch (tag_) {
    case PerturbationTag::Const:
      return 0;
    case PerturbationTag::Mixed:
    case PerturbationTag::Quadratic:
      return 2;
    case PerturbationTag::ZmResidual:
      return m_ - 1;
    case PerturbationTag::None:
      break;
  }
  throw std::invalid_argument("perturbation kind None has no monomial order");
}

int PerturbationKind::symmetry_order() const {
  switch (tag_) {
    case PerturbationTag::None:
      return 0;
    case PerturbationTag::ZmResidual:
      return m_;
    default:
      return 1;
  }
}

std::string PerturbationKind::name() const {
  switch (tag_) {
    case PerturbationTag::None:
      return "none";
    case PerturbationTag::Const:
      return "const";
    case PerturbationTag::Mixed:
      return "zzbar";
    case PerturbationTag::Quadratic:
      return "z2pos";
    case PerturbationTag::ZmResidual:
      if (m_ == 2) return "z2";
      if (m_ == 3) return "z3";
      return "zm" + std::to_string(m_);
  }
  return "unknown";
}

double ModelParams::a() const { return std::sin(alpha0); }
double ModelParams::b() const { return std::cos(alpha0); }

void ModelParams::validate() const {
  if (!std::isfinite(mu) || !std::isfinite(nu) || !std::isfinite(alpha0) || !std::isfinite(epsilon))
    throw std::invalid_argument("model parameters must be finite");
  if (!(alpha0 > 0.0 && alpha0 < kPi / 2.0))
    throw std::invalid_argument("alpha0 must lie in the open interval (0, pi/2)");
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
}

State State::from_polar(double r, double phi) { return {r * std::cos(phi), r * std::sin(phi)}; }

double State::r() const { return std::hypot(x, y); }

double State::phi() const {
  double p = std::atan2(y, x);
  if (p < 0.0) p += 2.0 * kPi;
  return p >= 2.0 * kPi ? 0.0 : p;
}

double distance(State p, State q) { return std::hypot(p.x - q.x, p.y - q.y); }

Complex rhs(const ModelParams& params, Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw std::domain_error("rhs: non-finite state");
  const Complex lambda{params.mu, params.nu};
  Complex dz = z * (lambda - params.c() * std::norm(z));
  const double eps = params.epsilon;
  switch (params.kind.tag()) {
    case PerturbationTag::None:
      break;
    case PerturbationTag::Const:
      dz += eps;
      break;
    case PerturbationTag::Mixed:
      dz += eps * std::norm(z);
      break;
    case PerturbationTag::Quadratic:
      dz += eps * z * z;
      break;
    case PerturbationTag::ZmResidual:
      dz += eps * ipow(std::conj(z), params.kind.m() - 1);
      break;
  }
  return dz;
}

State rhs(const ModelParams& params, State state) {
  if (!finite(state)) throw std::domain_error("rhs: non-finite state");
  return State::from_complex(rhs(params, state.complex()));
}

Matrix2 jacobian(const ModelParams& params, State state) {
  if (!finite(state)) throw std::domain_error("jacobian: non-finite state");
  // Wirtinger derivatives A = df/dz, B = df/dconj(z); then
  // df/dx = A + B and df/dy = i (A - B).
  const Complex z = state.complex();
  const Complex c = params.c();
  Complex A = Complex{params.mu, params.nu} - 2.0 * c * std::norm(z);
  Complex B = -c * z * z;
  const double eps = params.epsilon;
  switch (params.kind.tag()) {
    case PerturbationTag::None:
    case PerturbationTag::Const:
      break;
    case PerturbationTag::Mixed:
      A += eps * std::conj(z);
      B += eps * z;
      break;
    case PerturbationTag::Quadratic:
      A += 2.0 * eps * z;
      break;
    case PerturbationTag::ZmResidual: {
      const int m = params.kind.m();
      B += eps * static_cast<double>(m - 1) * ipow(std::conj(z), m - 2);
      break;
    }
  }
  const Complex dx = A + B;
  const Complex dy = Complex{0.0, 1.0} * (A - B);
  Matrix2 J;
  J(0, 0) = dx.real();
  J(0, 1) = dy.real();
  J(1, 0) = dx.imag();
  J(1, 1) = dy.imag();
  return J;
}

PolarRate polar_rhs(const ModelParams& params, double r, double phi) {
  if (!std::isfinite(r) || !std::isfinite(phi)) throw std::domain_error("polar_rhs: non-finite state");
  const double a = params.a();
  const double b = params.b();
  const double eps = params.epsilon;
  PolarRate out{r * (params.mu - a * r * r), params.nu - b * r * r};
  switch (params.kind.tag()) {
    case PerturbationTag::None:
      break;
    case PerturbationTag::Const: {
      const double rr = std::max(r, 1e-9);
      out.r_dot += eps * std::cos(phi);
      out.phi_dot -= eps * std::sin(phi) / rr;
      break;
    }
    case PerturbationTag::Mixed:
      out.r_dot += eps * r * r * std::cos(phi);
      out.phi_dot -= eps * r * std::sin(phi);
      break;
    case PerturbationTag::Quadratic:
      out.r_dot += eps * r * r * std::cos(phi);
      out.phi_dot += eps * r * std::sin(phi);
      break;
    case PerturbationTag::ZmResidual: {
      const int m = params.kind.m();
      out.r_dot += eps * std::pow(r, m - 1) * std::cos(m * phi);
      out.phi_dot -= eps * std::pow(r, m - 2) * std::sin(m * phi);
      break;
    }
  }
  return out;
}

UVPoint to_uv(MuNu p, double alpha0) {
  const double a = std::sin(alpha0);
  const double b = std::cos(alpha0);
  return {a * p.mu + b * p.nu, a * p.nu - b * p.mu};
}

UVPoint to_uv(const ModelParams& params) { return to_uv({params.mu, params.nu}, params.alpha0); }

MuNu from_uv(UVPoint uv, double alpha0) {
  const double a = std::sin(alpha0);
  const double b = std::cos(alpha0);
  return {a * uv.u - b * uv.v, b * uv.u + a * uv.v};
}

EpsilonScaling rescale_epsilon(const ModelParams& params) {
  if (params.kind.tag() == PerturbationTag::None)
    throw std::invalid_argument("rescale_epsilon: kind None has no monomial to normalize");
  if (!(params.epsilon > 0.0)) throw std::invalid_argument("rescale_epsilon: epsilon must be positive");
  const int p = params.kind.order();
  if (p == 3) throw std::domain_error("rescale_epsilon: epsilon is scale invariant for p = 3");
  EpsilonScaling s;
  s.delta = 1.0 / (3.0 - p);
  s.z_scale = std::pow(params.epsilon, s.delta);
  s.t_scale = std::pow(params.epsilon, -2.0 * s.delta);
  s.param_scale = std::pow(params.epsilon, 2.0 * s.delta);
  s.normalized = params;
  s.normalized.mu = params.mu / s.param_scale;
  s.normalized.nu = params.nu / s.param_scale;
  s.normalized.epsilon = 1.0;
  return s;
}

ModelParams restore_epsilon(const ModelParams& unit_params, double epsilon) {
  ModelParams probe = unit_params;
  probe.epsilon = epsilon;
  const EpsilonScaling s = rescale_epsilon(probe);
  ModelParams out = unit_params;
  out.mu = unit_params.mu * s.param_scale;
  out.nu = unit_params.nu * s.param_scale;
  out.epsilon = epsilon;
  return out;
}

State to_unit_state(const EpsilonScaling& scaling, State s) { return (1.0 / scaling.z_scale) * s; }

State from_unit_state(const EpsilonScaling& scaling, State s) { return scaling.z_scale * s; }

SignTransform canonicalize_signs(double a_raw, double b_raw) {
  if (!std::isfinite(a_raw) || !std::isfinite(b_raw))
    throw std::invalid_argument("canonicalize_signs: non-finite tilt");
  if (a_raw == 0.0 || b_raw == 0.0)
    throw std::invalid_argument("canonicalize_signs: degenerate tilt outside the open quadrant");
  if (std::abs(std::hypot(a_raw, b_raw) - 1.0) > 1e-9)
    throw std::invalid_argument("canonicalize_signs: tilt must have unit modulus");
  SignTransform t;
  double a = a_raw;
  double b = b_raw;
  if (a < 0.0) {
    t.time_reversed = true;
    a = -a;
    b = -b;
  }
  if (b < 0.0) {
    t.conjugated = true;
    b = -b;
  }
  t.alpha0 = std::atan2(a, b);
  return t;
}

ModelParams canonical_params(const SignTransform& t, double mu, double nu, double epsilon,
                             PerturbationKind kind) {
  ModelParams p;
  p.mu = t.time_reversed ? -mu : mu;
  p.nu = t.time_reversed ? -nu : nu;
  if (t.conjugated) p.nu = -p.nu;
  p.alpha0 = t.alpha0;
  p.epsilon = epsilon;
  p.kind = kind;
  return p;
}

State canonical_state(const SignTransform& t, PerturbationKind kind, State raw) {
  Complex z = raw.complex();
  if (t.time_reversed && kind.tag() != PerturbationTag::None)
    z *= std::polar(1.0, kPi / phase_weight(kind));
  if (t.conjugated) z = std::conj(z);
  return State::from_complex(z);
}

State raw_state(const SignTransform& t, PerturbationKind kind, State canonical) {
  Complex z = canonical.complex();
  if (t.conjugated) z = std::conj(z);
  if (t.time_reversed && kind.tag() != PerturbationTag::None)
    z *= std::polar(1.0, -kPi / phase_weight(kind));
  return State::from_complex(z);
}

}  // namespace imphopf
