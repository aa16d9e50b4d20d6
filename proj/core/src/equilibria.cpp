#include "imphopf/equilibria.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace imphopf {

namespace {

constexpr double kRootTol = 1e-10;

struct Root {
  double rho = 0.0;
  int branch = 0;
  bool merged = false;
};

// Real roots of al*x^2 + be*x + ga = 0 (al > 0), larger root first. A
// vanishing discriminant is reported as a single merged root.
std::vector<Root> quadratic_roots(double al, double be, double ga) {
  const double disc = be * be - 4.0 * al * ga;
  const double scale = be * be + std::abs(4.0 * al * ga);
  if (disc < -1e-13 * scale) return {};
  if (std::abs(disc) <= 1e-13 * scale) return {{-be / (2.0 * al), 0, true}};
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (be + std::copysign(sq, be));
  double r1 = q / al;
  double r2 = q != 0.0 ? ga / q : -be / al - r1;
  if (r1 < r2) std::swap(r1, r2);
  return {{r1, +1, false}, {r2, -1, false}};
}

double poly_eval(const std::vector<double>& c, double x) {
  // c[i] multiplies x^i
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
  return acc;
}

double poly_deriv(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 1;) acc = acc * x + static_cast<double>(i) * c[i];
  return acc;
}

double newton_1d(const std::vector<double>& c, double x, int iters) {
  for (int i = 0; i < iters; ++i) {
    const double d = poly_deriv(c, x);
    if (d == 0.0) break;
    const double step = poly_eval(c, x) / d;
    const double next = x - step;
    if (std::abs(poly_eval(c, next)) > std::abs(poly_eval(c, x))) break;
    x = next;
  }
  return x;
}

// Eigenvalues of the companion matrix of the monic-normalized polynomial.
std::vector<Complex> companion_roots(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) M(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) M(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  std::vector<Complex> out;
  for (int i = 0; i < n; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

// rho^3 - 2u rho^2 + S rho - eps^2 = 0. The isolated eigenvalue is always
// real; the remaining quadratic factor is solved in closed form so that a
// near-double root is resolved by its discriminant, not by eigenvalue noise.
std::vector<Root> cubic_roots(double u, double S, double eps2) {
  const std::vector<double> c{-eps2, S, -2.0 * u, 1.0};
  const auto ev = companion_roots(c);
  std::size_t iso = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ev.size(); ++j)
      if (j != i) dmin = std::min(dmin, std::abs(ev[i] - ev[j]));
    if (dmin > best) {
      best = dmin;
      iso = i;
    }
  }
  const double r1 = newton_1d(c, ev[iso].real(), 8);
  // (rho - r1)(rho^2 + p rho + q)
  const double p = -2.0 * u + r1;
  const double q = S + r1 * p;
  std::vector<Root> out;
  out.push_back({r1, 0, false});
  for (Root r : quadratic_roots(1.0, p, q)) {
    if (!r.merged) r.rho = newton_1d(c, r.rho, 4);
    out.push_back(r);
  }
  // A root of the quadratic factor may coincide with r1 (cusp or a double
  // root at the isolated value).
  if (out.size() == 3) {
    for (std::size_t i = 1; i < 3; ++i) {
      if (std::abs(out[i].rho - r1) <= 1e-7 * std::max(1.0, std::abs(r1))) {
        out[0].merged = out[i].merged = true;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Root& x, const Root& y) { return x.rho < y.rho; });
  for (auto& r : out) r.branch = 0;
  return out;
}

// Near-L roots of g(rho) = eps^2 rho^(m-2) - (rho - u)^2 - v^2 for m >= 4.
// g is concave below its inflection point, so at most two roots live there:
// one on each side of the maximum of g.
std::vector<Root> zm_roots(int m, double u, double v, double eps) {
  const double e2 = eps * eps;
  auto g = [&](double x) { return e2 * std::pow(x, m - 2) - (x - u) * (x - u) - v * v; };
  auto dg = [&](double x) { return (m - 2) * e2 * std::pow(x, m - 3) - 2.0 * (x - u); };
  auto ddg = [&](double x) { return (m - 2) * (m - 3) * e2 * std::pow(x, m - 4) - 2.0; };

  double hi_bound = std::numeric_limits<double>::infinity();
  if (m > 4) hi_bound = std::pow(2.0 / ((m - 2) * (m - 3) * e2), 1.0 / (m - 4));

  // maximum of g on [0, hi_bound)
  double x = std::max(u, 0.0);
  if (x >= hi_bound) return {};
  for (int i = 0; i < 100; ++i) {
    const double step = dg(x) / ddg(x);
    double next = x - step;
    if (next < 0.0) next = 0.5 * x;
    if (next >= hi_bound) next = 0.5 * (x + hi_bound);
    if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  const double xmax = x;
  const double gmax = g(xmax);
  const double scale = u * u + v * v + e2 * std::pow(std::max(xmax, 1e-300), m - 2) + 1e-300;
  if (gmax < -1e-14 * scale) return {};
  if (gmax <= 1e-14 * scale) return {{xmax, 0, true}};

  auto bisect = [&](double lo, double hi) {
    double glo = g(lo);
    for (int i = 0; i < 200 && hi - lo > 4e-16 * std::max(1.0, hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g(mid);
      if ((gm < 0.0) == (glo < 0.0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  std::vector<Root> out;
  double hi = xmax + std::max(1.0, std::abs(xmax));
  while (g(hi) > 0.0 && hi < hi_bound) hi = std::min(2.0 * hi + 1.0, hi_bound);
  if (g(hi) < 0.0) out.push_back({bisect(xmax, hi), +1, false});
  if (g(0.0) < 0.0) out.push_back({bisect(0.0, xmax), -1, false});
  return out;
}

std::vector<Root> roots_for(const ModelParams& params) {
  const PerturbationKind kind = params.kind;
  if (kind.tag() == PerturbationTag::None || params.epsilon == 0.0) return {};
  const UVPoint uv = to_uv(params);
  const double S = params.mu * params.mu + params.nu * params.nu;
  const double e2 = params.epsilon * params.epsilon;
  const int p = kind.order();
  if (p == 0) return cubic_roots(uv.u, S, e2);
  if (p == 1) return quadratic_roots(1.0, -2.0 * uv.u, S - e2);
  if (p == 2) return quadratic_roots(1.0, -(2.0 * uv.u + e2), S);
  return zm_roots(kind.m(), uv.u, uv.v, params.epsilon);
}

int phase_weight(PerturbationKind kind) {
  switch (kind.tag()) {
    case PerturbationTag::Quadratic:
      return -1;
    case PerturbationTag::ZmResidual:
      return kind.m();
    default:
      return 1;
  }
}

EquilibriumLabel nontrivial_label(PerturbationKind kind, const Root& root, int j, int running) {
  if (kind.tag() == PerturbationTag::Const) return {LabelKind::Indexed, running};
  const bool plus = root.branch >= 0;
  if (kind.tag() == PerturbationTag::ZmResidual && kind.m() == 2) {
    if (j == 0) return {plus ? LabelKind::Pplus : LabelKind::Pminus, 0};
    return {plus ? LabelKind::PplusStar : LabelKind::PminusStar, 0};
  }
  return {plus ? LabelKind::Pplus : LabelKind::Pminus, j};
}

Equilibrium make_p0(const ModelParams& params) {
  Equilibrium e = classify(params, State{});
  e.label = {LabelKind::P0, 0};
  return e;
}

std::vector<Equilibrium> solve(const ModelParams& params) {
  params.validate();
  std::vector<Equilibrium> out;
  const PerturbationKind kind = params.kind;
  const bool has_p0 = kind.tag() != PerturbationTag::Const || params.epsilon == 0.0;
  if (has_p0) out.push_back(make_p0(params));
  if (kind.tag() == PerturbationTag::None || params.epsilon == 0.0) return out;

  std::vector<Root> roots = roots_for(params);
  // larger branch first
  std::stable_sort(roots.begin(), roots.end(), [](const Root& x, const Root& y) { return x.branch > y.branch; });
  const int k = phase_weight(kind);
  const double a = params.a();
  const double b = params.b();
  int running = 0;
  for (const Root& root : roots) {
    if (std::abs(root.rho) <= kRootTol) {
      if (has_p0) out.front().merged = true;
      continue;
    }
    if (root.rho < 0.0) continue;
    const double r = std::sqrt(root.rho);
    const double theta = std::atan2(params.nu - b * root.rho, a * root.rho - params.mu);
    const int copies = std::abs(k);
    for (int j = 0; j < copies; ++j) {
      const double phi = (theta + 2.0 * kPi * j) / k;
      const State guess = State::from_polar(r, phi);
      Equilibrium e = classify(params, guess);
      e.branch = root.branch;
      e.merged = root.merged;
      e.label = nontrivial_label(kind, root, j, running);
      out.push_back(e);
      ++running;
    }
  }
  return out;
}

void require_kind(const ModelParams&, bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(what) + ": perturbation kind not supported");
}

}  // namespace

std::string EquilibriumLabel::str() const {
  switch (kind) {
    case LabelKind::P0:
      return "P0";
    case LabelKind::Pplus:
      return index == 0 ? "P+" : "P+[" + std::to_string(index) + "]";
    case LabelKind::Pminus:
      return index == 0 ? "P-" : "P-[" + std::to_string(index) + "]";
    case LabelKind::PplusStar:
      return "P+*";
    case LabelKind::PminusStar:
      return "P-*";
    case LabelKind::Indexed:
      return "P" + std::to_string(index + 1);
  }
  return "?";
}

std::string to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::StableNode:
      return "stable-node";
    case StabilityClass::StableFocus:
      return "stable-focus";
    case StabilityClass::Saddle:
      return "saddle";
    case StabilityClass::UnstableNode:
      return "unstable-node";
    case StabilityClass::UnstableFocus:
      return "unstable-focus";
    case StabilityClass::NonHyperbolic:
      return "non-hyperbolic";
  }
  return "?";
}

StabilityClass classify_invariants(double T, double D, double tol) {
  if (D < -tol) return StabilityClass::Saddle;
  if (std::abs(D) <= tol) return StabilityClass::NonHyperbolic;
  if (std::abs(T) <= tol) return StabilityClass::NonHyperbolic;
  const double Q = T * T - 4.0 * D;
  if (T < 0.0) return Q >= 0.0 ? StabilityClass::StableNode : StabilityClass::StableFocus;
  return Q >= 0.0 ? StabilityClass::UnstableNode : StabilityClass::UnstableFocus;
}

State newton_polish(const ModelParams& params, State guess, int max_iter) {
  State x = guess;
  double res = rhs(params, x).norm();
  for (int it = 0; it < max_iter && res > 0.0; ++it) {
    const Matrix2 J = jacobian(params, x);
    const double det = J.det();
    if (det == 0.0 || !std::isfinite(det)) break;
    const State f = rhs(params, x);
    const State dx{(J(1, 1) * f.x - J(0, 1) * f.y) / det, (-J(1, 0) * f.x + J(0, 0) * f.y) / det};
    const State next = x - dx;
    if (!std::isfinite(next.x) || !std::isfinite(next.y)) break;
    const double next_res = rhs(params, next).norm();
    if (!(next_res < res)) break;
    x = next;
    res = next_res;
  }
  return x;
}

Equilibrium classify(const ModelParams& params, State position) {
  if (!(rhs(params, position).norm() <= 1e-6))
    throw std::invalid_argument("classify: position is not an approximate equilibrium");
  Equilibrium e;
  e.position = newton_polish(params, position);
  const Matrix2 J = jacobian(params, e.position);
  e.T = J.trace();
  e.D = J.det();
  e.Q = e.T * e.T - 4.0 * e.D;
  const Complex sq = std::sqrt(Complex{e.Q, 0.0});
  e.eigenvalues = {0.5 * (e.T + sq), 0.5 * (e.T - sq)};
  e.cls = classify_invariants(e.T, e.D);
  return e;
}

std::vector<double> branch_roots(const ModelParams& params) {
  std::vector<double> out;
  for (const Root& r : roots_for(params))
    if (r.rho > kRootTol) out.push_back(r.rho);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Equilibrium> fixed_points_const(const ModelParams& params) {
  require_kind(params, params.kind.tag() == PerturbationTag::Const, "fixed_points_const");
  return solve(params);
}

std::vector<Equilibrium> fixed_points_z2(const ModelParams& params) {
  require_kind(params, params.kind.tag() == PerturbationTag::ZmResidual && params.kind.m() == 2,
               "fixed_points_z2");
  return solve(params);
}

std::vector<Equilibrium> fixed_points_quadratic(const ModelParams& params) {
  const PerturbationTag t = params.kind.tag();
  require_kind(params,
               t == PerturbationTag::Mixed || t == PerturbationTag::Quadratic ||
                   (t == PerturbationTag::ZmResidual && params.kind.m() == 3),
               "fixed_points_quadratic");
  return solve(params);
}

std::vector<Equilibrium> fixed_points_zm(const ModelParams& params) {
  require_kind(params, params.kind.tag() == PerturbationTag::ZmResidual && params.kind.m() >= 4,
               "fixed_points_zm");
  return solve(params);
}

std::vector<Equilibrium> fixed_points(const ModelParams& params) { return solve(params); }

}  // namespace imphopf
