#include "imphopf/globalbif.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imphopf/equilibria.hpp"

namespace imphopf {

// ---------------------------------------------------------------------------
// Period scaling fits

std::string to_string(ScalingModel m) { return m == ScalingModel::SqrtLaw ? "sqrt" : "log"; }

namespace {

double basis(ScalingModel m, double d) { return m == ScalingModel::SqrtLaw ? 1.0 / std::sqrt(d) : -std::log(d); }

double basis_deriv(ScalingModel m, double d) {
  return m == ScalingModel::SqrtLaw ? -0.5 / (d * std::sqrt(d)) : -1.0 / d;
}

struct LinearSolve {
  double coeff = 0.0;
  double offset = 0.0;
  double cost = INFINITY;
};

// Least squares for (coeff, offset) at fixed mu_c.
LinearSolve solve_linear(const std::vector<PeriodSample>& s, ScalingModel m, double mu_c) {
  double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (const auto& p : s) {
    const double x = basis(m, p.mu - mu_c);
    s1 += 1;
    sx += x;
    sxx += x * x;
    sy += p.period;
    sxy += x * p.period;
  }
  const double det = s1 * sxx - sx * sx;
  LinearSolve out;
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) return out;
  out.coeff = (s1 * sxy - sx * sy) / det;
  out.offset = (sy - out.coeff * sx) / s1;
  double cost = 0.0;
  for (const auto& p : s) {
    const double r = out.coeff * basis(m, p.mu - mu_c) + out.offset - p.period;
    cost += r * r;
  }
  out.cost = cost;
  return out;
}

double cost_of(const std::vector<PeriodSample>& s, ScalingModel m, double mu_c, double k, double c) {
  double cost = 0.0;
  for (const auto& p : s) {
    const double r = k * basis(m, p.mu - mu_c) + c - p.period;
    cost += r * r;
  }
  return cost;
}

}  // namespace

double PeriodScalingFit::predict(double mu) const {
  if (!(mu > mu_c)) return NAN;
  return coeff * basis(model, mu - mu_c) + offset;
}

PeriodScalingFit fit_period_scaling(const std::vector<PeriodSample>& samples, ScalingModel model) {
  if (samples.size() < 5) throw std::invalid_argument("fit_period_scaling: need at least 5 samples");
  double lo = INFINITY, hi = -INFINITY, tscale = 0.0;
  for (const auto& p : samples) {
    if (!std::isfinite(p.mu) || !std::isfinite(p.period) || !(p.period > 0.0))
      throw std::invalid_argument("fit_period_scaling: samples must be finite with positive periods");
    lo = std::min(lo, p.mu);
    hi = std::max(hi, p.mu);
    tscale = std::max(tscale, p.period);
  }
  const double range = hi - lo;
  if (!(range > 0.0)) throw std::invalid_argument("fit_period_scaling: samples span no parameter range");

  // Scan theta = ln(min(mu) - mu_c) on a log grid.
  const double t_lo = std::log(1e-12 * std::max(range, 1e-300));
  const double t_hi = std::log(10.0 * range);
  constexpr int kScan = 600;
  double theta = t_hi;
  LinearSolve best;
  for (int i = 0; i <= kScan; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / kScan;
    const LinearSolve ls = solve_linear(samples, model, lo - std::exp(t));
    if (ls.cost < best.cost) {
      best = ls;
      theta = t;
    }
  }

  Eigen::Vector3d x(theta, best.coeff, best.offset);
  double cost = best.cost;
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  const double cost_floor = 1e-30 * tscale * tscale * samples.size();
  for (; it < 200; ++it) {
    const double d0 = std::exp(x(0));
    const double mu_c = lo - d0;
    Eigen::MatrixXd J(samples.size(), 3);
    Eigen::VectorXd r(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = samples[i].mu - mu_c;
      r(i) = x(1) * basis(model, d) + x(2) - samples[i].period;
      J(i, 0) = x(1) * basis_deriv(model, d) * d0;
      J(i, 1) = basis(model, d);
      J(i, 2) = 1.0;
    }
    const Eigen::Matrix3d A = J.transpose() * J;
    const Eigen::Vector3d g = J.transpose() * r;
    if (cost <= cost_floor || g.norm() <= 1e-15 * (1.0 + cost)) {
      converged = true;
      break;
    }
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::Matrix3d M = A;
      for (int k = 0; k < 3; ++k) M(k, k) += lambda * std::max(A(k, k), 1e-300);
      const Eigen::Vector3d step = M.ldlt().solve(-g);
      const Eigen::Vector3d xn = x + step;
      const double cn = cost_of(samples, model, lo - std::exp(xn(0)), xn(1), xn(2));
      if (std::isfinite(cn) && cn < cost) {
        const double rel = (cost - cn) / std::max(cost, 1e-300);
        const double step_rel = std::abs(step(0)) + std::abs(step(1)) / (1.0 + std::abs(xn(1))) +
                                std::abs(step(2)) / (1.0 + std::abs(xn(2)));
        x = xn;
        cost = cn;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel < 1e-14 || step_rel < 1e-13) converged = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) {
      // No descent direction left: stationary to working precision.
      converged = true;
      break;
    }
    if (converged) {
      ++it;
      break;
    }
  }

  PeriodScalingFit f;
  f.model = model;
  f.mu_c = lo - std::exp(x(0));
  f.coeff = x(1);
  f.offset = x(2);
  f.rms_residual = std::sqrt(cost / samples.size());
  f.window_lo = lo;
  f.window_hi = hi;
  f.iterations = it;
  f.converged = converged;
  return f;
}

WindowFits fit_windows(const std::vector<PeriodSample>& samples, double mu_c, double near_fraction,
                       double far_fraction) {
  if (!(near_fraction > 0.0) || !(far_fraction > 0.0) || near_fraction + far_fraction > 1.0)
    throw std::invalid_argument("fit_windows: window fractions must be positive and sum to at most 1");
  std::vector<PeriodSample> s = samples;
  std::sort(s.begin(), s.end(), [&](const PeriodSample& a, const PeriodSample& b) {
    return std::abs(a.mu - mu_c) < std::abs(b.mu - mu_c);
  });
  const std::size_t n = s.size();
  const auto nn = static_cast<std::size_t>(std::ceil(near_fraction * n));
  const auto nf = static_cast<std::size_t>(std::ceil(far_fraction * n));
  if (nn < 5 || nf < 5 || nn + nf > n) throw std::invalid_argument("fit_windows: too few samples per window");
  const std::vector<PeriodSample> near(s.begin(), s.begin() + nn);
  const std::vector<PeriodSample> far(s.end() - nf, s.end());
  WindowFits w;
  w.near_sqrt = fit_period_scaling(near, ScalingModel::SqrtLaw);
  w.near_log = fit_period_scaling(near, ScalingModel::LogLaw);
  w.far_sqrt = fit_period_scaling(far, ScalingModel::SqrtLaw);
  w.far_log = fit_period_scaling(far, ScalingModel::LogLaw);
  w.near_count = nn;
  w.far_count = nf;
  return w;
}

// ---------------------------------------------------------------------------
// Boundaries

std::string to_string(BoundaryType t) {
  switch (t) {
    case BoundaryType::SNIC: return "SNIC";
    case BoundaryType::Homoclinic: return "Homoclinic";
    case BoundaryType::Heteroclinic: return "Heteroclinic";
    case BoundaryType::CyclicFold: return "CyclicFold";
    case BoundaryType::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

ModelParams ParamPath::at(double s) const {
  ModelParams p = base;
  p.mu = start.mu + s * (end.mu - start.mu);
  p.nu = start.nu + s * (end.nu - start.nu);
  return p;
}

double ParamPath::length() const { return std::hypot(end.mu - start.mu, end.nu - start.nu); }

BoundaryOptions::BoundaryOptions() {
  cycle.max_time = 2e4;
  cycle.transient = 500.0;
  cycle.compute_floquet = false;
}

CycleSearch probe_cycle(const ParamPath& path, double s, const BoundaryOptions& opt, State seed) {
  CycleOptions co = opt.cycle;
  co.max_period = std::min(co.max_period, opt.max_period);
  return find_limit_cycle(path.at(s), seed, co);
}

namespace {

State default_seed(const ModelParams& p) {
  const double scale = std::max({std::abs(p.mu), std::abs(p.nu), std::abs(p.epsilon), 1.0});
  return {2.0 * std::sqrt(scale / p.a()), 0.1};
}

MuNu mu_nu(const ModelParams& p) { return {p.mu, p.nu}; }

int count_equilibria(const ModelParams& p) { return static_cast<int>(fixed_points(p).size()); }

}  // namespace

BoundaryPoint locate_boundary(const ParamPath& path, const BoundaryOptions& opt) {
  path.base.validate();
  const double L = path.length();
  if (!(L > 0.0)) throw std::invalid_argument("locate_boundary: degenerate path");
  if (!(opt.bracket_tol > 0.0)) throw std::invalid_argument("locate_boundary: bracket_tol must be positive");
  const State seed = opt.seed.value_or(default_seed(path.at(0.0)));

  BoundaryPoint bp;
  bp.horizon = opt.max_period;
  const CycleSearch first = probe_cycle(path, 0.0, opt, seed);
  if (!first.found()) throw std::invalid_argument("locate_boundary: no cycle at the start of the path");
  bp.periods.push_back({0.0, first.cycle->period});

  const CycleSearch last = probe_cycle(path, 1.0, opt, seed);
  if (last.found()) {
    bp.s_lo = bp.s_hi = 1.0;
    bp.location = bp.bracket_lo = bp.bracket_hi = mu_nu(path.at(1.0));
    bp.converged = false;
    bp.type_guess = BoundaryType::Undetermined;
    return bp;
  }

  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < opt.max_bisections && (hi - lo) * L > opt.bracket_tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const CycleSearch r = probe_cycle(path, mid, opt, seed);
    if (r.found()) {
      lo = mid;
      bp.periods.push_back({mid, r.cycle->period});
    } else {
      hi = mid;
    }
  }
  bp.s_lo = lo;
  bp.s_hi = hi;
  bp.bracket_lo = mu_nu(path.at(lo));
  bp.bracket_hi = mu_nu(path.at(hi));
  bp.location = mu_nu(path.at(0.5 * (lo + hi)));
  bp.bracket_width = (hi - lo) * L;
  bp.converged = bp.bracket_width <= opt.bracket_tol;
  // Bisection samples re-expressed as distance from the bracket end.
  for (auto& p : bp.periods) p.mu = (hi - p.mu) * L;
  if (opt.classify) classify_boundary(path, bp, opt);
  return bp;
}

std::optional<double> locate_saddle_node(const ParamPath& path, double tol, int scan) {
  if (scan < 1) throw std::invalid_argument("locate_saddle_node: scan must be positive");
  const double L = std::max(path.length(), 1e-300);
  const int n0 = count_equilibria(path.at(0.0));
  double prev = 0.0;
  for (int i = 1; i <= scan; ++i) {
    const double s = static_cast<double>(i) / scan;
    if (count_equilibria(path.at(s)) != n0) {
      double lo = prev, hi = s;
      while ((hi - lo) * L > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_equilibria(path.at(mid)) == n0)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = s;
  }
  return std::nullopt;
}

BoundaryType discriminate(const BoundaryPoint& bp) {
  const BoundaryEvidence& ev = bp.evidence;
  if (!ev.period_diverges) return BoundaryType::CyclicFold;
  if (!ev.fits) return BoundaryType::Undetermined;
  // Horizon slack: a SqrtLaw cycle reaches max_period at (k / T_max)^2 from
  // the true boundary.
  const double k = std::abs(ev.fits->near_sqrt.coeff);
  const double slack = 2.0 * bp.bracket_width + 4.0 * (k / bp.horizon) * (k / bp.horizon);
  const double s_c = 0.5 * (bp.s_lo + bp.s_hi);
  const bool sn_coincides = ev.s_saddle_node && ev.sn_gap <= slack;
  if (sn_coincides) {
    if (ev.sqrt_dominates_near && ev.sqrt_dominates_far) return BoundaryType::SNIC;
    return BoundaryType::Undetermined;
  }
  const bool sn_precedes = ev.s_saddle_node && *ev.s_saddle_node < s_c;
  if (!ev.sqrt_dominates_near)
    return ev.symmetric_saddles ? BoundaryType::Heteroclinic : BoundaryType::Homoclinic;
  if (sn_precedes) return BoundaryType::Undetermined;
  return BoundaryType::Undetermined;
}

void classify_boundary(const ParamPath& path, BoundaryPoint& bp, const BoundaryOptions& opt) {
  const double L = path.length();
  const State seed = opt.seed.value_or(default_seed(path.at(0.0)));
  BoundaryEvidence ev;

  // Log-spaced period samples on the cycle side, at distance x from s_hi.
  const int n = std::max(opt.period_samples, 10);
  const double x_near = std::max(2.0 * bp.bracket_width, 1e-7 * std::max(1.0, L));
  const double x_far = std::min(opt.period_span, bp.s_hi * L);
  std::vector<PeriodSample> samples;
  if (x_far > x_near) {
    for (int i = 0; i < n; ++i) {
      const double x = x_near * std::pow(x_far / x_near, static_cast<double>(i) / (n - 1));
      const double s = bp.s_hi - x / L;
      if (s < 0.0 || s > bp.s_lo) continue;
      const CycleSearch r = probe_cycle(path, s, opt, seed);
      if (r.found()) samples.push_back({x, r.cycle->period});
    }
  }
  std::sort(samples.begin(), samples.end(), [](auto& a, auto& b) { return a.mu < b.mu; });
  bp.periods = samples;

  // Divergence: growth over the nearest decade of distances.
  if (samples.size() >= 2) {
    const PeriodSample& nearest = samples.front();
    const PeriodSample* decade = &samples.back();
    for (const auto& p : samples)
      if (p.mu >= 10.0 * nearest.mu) {
        decade = &p;
        break;
      }
    ev.period_diverges = nearest.period - decade->period > 0.02 * nearest.period;
  }

  const double s_c = 0.5 * (bp.s_lo + bp.s_hi);
  ev.s_saddle_node = locate_saddle_node(path);
  if (ev.s_saddle_node) ev.sn_gap = std::abs(*ev.s_saddle_node - s_c) * L;

  if (samples.size() >= 17) {
    try {
      const WindowFits w = fit_windows(samples, 0.0);
      ev.sqrt_dominates_near = w.near_sqrt.rms_residual < w.near_log.rms_residual;
      ev.sqrt_dominates_far = w.far_sqrt.rms_residual < w.far_log.rms_residual;
      ev.fits = w;
    } catch (const std::invalid_argument&) {
    }
  }

  // Saddle closest to the cycle at the last existing sample.
  const ModelParams p_lo = path.at(bp.s_lo);
  const CycleSearch cyc = probe_cycle(path, bp.s_lo, opt, seed);
  const auto eqs = fixed_points(p_lo);
  if (cyc.found()) {
    int best = -1;
    double best_d = INFINITY;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
      if (eqs[i].cls != StabilityClass::Saddle) continue;
      double d = INFINITY;
      for (const State& q : cyc.cycle->samples) d = std::min(d, distance(q, eqs[i].position));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      const Equilibrium& sad = eqs[best];
      ev.saddle_lambda = std::max(sad.eigenvalues[0].real(), sad.eigenvalues[1].real());
      const int m = p_lo.kind.symmetry_order();
      if (m >= 2) {
        bool all = true;
        for (int j = 1; j < m; ++j) {
          const Complex img = sad.position.complex() * std::polar(1.0, 2.0 * kPi * j / m);
          bool hit = false;
          for (std::size_t i = 0; i < eqs.size(); ++i)
            if (static_cast<int>(i) != best && eqs[i].cls == StabilityClass::Saddle &&
                distance(eqs[i].position, State::from_complex(img)) < 1e-6 * std::max(1.0, sad.position.norm()))
              hit = true;
          all = all && hit;
        }
        ev.symmetric_saddles = all;
      }
    }
  }
  bp.evidence = ev;
  bp.type_guess = discriminate(bp);
}

// ---------------------------------------------------------------------------
// Gluing

std::string to_string(GluingState g) {
  switch (g) {
    case GluingState::TwoSmallCycles: return "TwoSmallCycles";
    case GluingState::GluedLargeCycle: return "GluedLargeCycle";
    case GluingState::NoUnstableCycle: return "NoUnstableCycle";
  }
  return "NoUnstableCycle";
}

GluingReport gluing_probe(const ModelParams& params, const CycleOptions& opt) {
  params.validate();
  if (params.kind.tag() != PerturbationTag::ZmResidual || params.kind.m() != 2)
    throw std::invalid_argument("gluing_probe: requires the conj(z) case");
  const auto eqs = fixed_points(params);
  const Equilibrium* pplus = nullptr;
  for (const auto& e : eqs)
    if (e.label.kind == LabelKind::Pplus) pplus = &e;
  if (!pplus) throw std::invalid_argument("gluing_probe: P+ does not exist at these parameters");

  CycleOptions co = opt;
  co.direction = TimeDirection::Backward;
  co.center_mode = SectionCenter::Fixed;
  co.center = pplus->position;
  const double r = std::max(pplus->position.norm(), 1e-3);
  const State seed = pplus->position + State{1e-3 * r, 1e-3 * r};
  const CycleSearch cs = find_limit_cycle(params, seed, co);

  GluingReport rep;
  if (cs.status == CycleSearchStatus::Escaped || cs.status == CycleSearchStatus::FixedPoint) {
    rep.state = GluingState::NoUnstableCycle;
    return rep;
  }
  if (!cs.found()) throw std::runtime_error("gluing_probe: reverse-time search did not settle");
  rep.cycle = cs.cycle;
  for (const auto& e : eqs)
    if (winding_number(cs.cycle->samples, e.position) != 0) ++rep.enclosed_equilibria;
  if (rep.enclosed_equilibria == 1)
    rep.state = GluingState::TwoSmallCycles;
  else if (rep.enclosed_equilibria >= 3)
    rep.state = GluingState::GluedLargeCycle;
  else
    throw std::runtime_error("gluing_probe: unstable cycle encloses an unexpected set of equilibria");
  return rep;
}

// ---------------------------------------------------------------------------
// Polynomials and the Takens-Bogdanov normal form

double BiPoly::operator()(double x, double y) const {
  double s = 0.0;
  for (int i = 0; i <= kMaxDeg; ++i)
    for (int j = 0; i + j <= kMaxDeg; ++j) s += c[i][j] * std::pow(x, i) * std::pow(y, j);
  return s;
}

BiPoly BiPoly::degree_part(int k) const {
  BiPoly out;
  for (int i = 0; i <= k && i <= kMaxDeg; ++i)
    if (k - i <= kMaxDeg) out.c[i][k - i] = c[i][k - i];
  return out;
}

BiPoly BiPoly::dx() const {
  BiPoly out;
  for (int i = 1; i <= kMaxDeg; ++i)
    for (int j = 0; i + j <= kMaxDeg; ++j) out.c[i - 1][j] = i * c[i][j];
  return out;
}

BiPoly BiPoly::dy() const {
  BiPoly out;
  for (int i = 0; i <= kMaxDeg; ++i)
    for (int j = 1; i + j <= kMaxDeg; ++j) out.c[i][j - 1] = j * c[i][j];
  return out;
}

BiPoly operator+(const BiPoly& a, const BiPoly& b) {
  BiPoly out;
  for (int i = 0; i <= BiPoly::kMaxDeg; ++i)
    for (int j = 0; j <= BiPoly::kMaxDeg; ++j) out.c[i][j] = a.c[i][j] + b.c[i][j];
  return out;
}

BiPoly operator-(const BiPoly& a, const BiPoly& b) { return a + (-1.0) * b; }

BiPoly operator*(double s, const BiPoly& a) {
  BiPoly out;
  for (int i = 0; i <= BiPoly::kMaxDeg; ++i)
    for (int j = 0; j <= BiPoly::kMaxDeg; ++j) out.c[i][j] = s * a.c[i][j];
  return out;
}

BiPoly operator*(const BiPoly& a, const BiPoly& b) {
  constexpr int D = BiPoly::kMaxDeg;
  BiPoly out;
  for (int i = 0; i <= D; ++i)
    for (int j = 0; i + j <= D; ++j) {
      if (a.c[i][j] == 0.0) continue;
      for (int k = 0; i + j + k <= D; ++k)
        for (int l = 0; i + j + k + l <= D; ++l) out.c[i + k][j + l] += a.c[i][j] * b.c[k][l];
    }
  return out;
}

namespace {

BiPoly monomial(int i, int j, double v = 1.0) {
  BiPoly p;
  p.c[i][j] = v;
  return p;
}

BiPoly power(const BiPoly& p, int n) {
  BiPoly out = monomial(0, 0);
  for (int k = 0; k < n; ++k) out = out * p;
  return out;
}

// p(X, Y), truncated.
BiPoly compose(const BiPoly& p, const BiPoly& X, const BiPoly& Y) {
  BiPoly out;
  for (int i = 0; i <= BiPoly::kMaxDeg; ++i)
    for (int j = 0; i + j <= BiPoly::kMaxDeg; ++j)
      if (p.c[i][j] != 0.0) out = out + p.c[i][j] * (power(X, i) * power(Y, j));
  return out;
}

struct HomologicalSolution {
  BiPoly h1, h2;
  double n1 = 0.0, n2 = 0.0;
};

// Solves F_k = L(h) + N for homogeneous degree k, with
// L(h) = (y dh1/dx - h2, y dh2/dx) and N = (0, n1 x^k + n2 x^(k-1) y).
HomologicalSolution solve_homological(const PolyField& F, int k) {
  const int nm = k + 1;  // monomials x^(k-j) y^j, j = 0..k
  const int nu = 2 * nm + 2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * nm, nu);
  Eigen::VectorXd rhs(2 * nm);
  // Unknown index: alpha_j (h1 coeff of x^(k-j) y^j) -> j; beta_j -> nm + j;
  // n1 -> 2nm, n2 -> 2nm+1. Row index: component * nm + j.
  for (int j = 0; j <= k; ++j) {
    const int i = k - j;
    // y d/dx of x^i y^j = i x^(i-1) y^(j+1): contributes to monomial index j+1.
    if (i >= 1) {
      A(0 * nm + j + 1, j) += i;
      A(1 * nm + j + 1, nm + j) += i;
    }
    A(0 * nm + j, nm + j) -= 1.0;
    rhs(0 * nm + j) = F.f.c[i][j];
    rhs(1 * nm + j) = F.g.c[i][j];
  }
  A(1 * nm + 0, 2 * nm) = 1.0;
  A(1 * nm + 1, 2 * nm + 1) = 1.0;
  const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(rhs);
  HomologicalSolution out;
  for (int j = 0; j <= k; ++j) {
    out.h1.c[k - j][j] = sol(j);
    out.h2.c[k - j][j] = sol(nm + j);
  }
  out.n1 = sol(2 * nm);
  out.n2 = sol(2 * nm + 1);
  return out;
}

// Field in the new variables after x = xi + h(xi):
// (I + Dh)^-1 F(xi + h) with the inverse expanded to second order.
PolyField transform(const PolyField& F, const BiPoly& h1, const BiPoly& h2) {
  const BiPoly X = monomial(1, 0) + h1;
  const BiPoly Y = monomial(0, 1) + h2;
  const BiPoly f = compose(F.f, X, Y);
  const BiPoly g = compose(F.g, X, Y);
  const BiPoly m11 = h1.dx(), m12 = h1.dy(), m21 = h2.dx(), m22 = h2.dy();
  // M^2
  const BiPoly q11 = m11 * m11 + m12 * m21, q12 = m11 * m12 + m12 * m22;
  const BiPoly q21 = m21 * m11 + m22 * m21, q22 = m21 * m12 + m22 * m22;
  PolyField out;
  out.f = f - (m11 * f + m12 * g) + (q11 * f + q12 * g);
  out.g = g - (m21 * f + m22 * g) + (q21 * f + q22 * g);
  return out;
}

}  // namespace

BTNormalForm bt_normal_form(const PolyField& field) {
  PolyField F = field;
  // Linear part is taken to be exactly (y, 0); constants are dropped.
  for (auto* p : {&F.f, &F.g}) {
    p->c[0][0] = 0.0;
    p->c[1][0] = 0.0;
    p->c[0][1] = 0.0;
  }
  F.f.c[0][1] = 1.0;
  BTNormalForm nf;
  PolyField F2{F.f.degree_part(2), F.g.degree_part(2)};
  const HomologicalSolution s2 = solve_homological(F2, 2);
  nf.a2 = s2.n1;
  nf.b2 = s2.n2;
  const PolyField G = transform(F, s2.h1, s2.h2);
  PolyField G3{G.f.degree_part(3), G.g.degree_part(3)};
  const HomologicalSolution s3 = solve_homological(G3, 3);
  nf.a3 = s3.n1;
  nf.b3 = s3.n2;
  return nf;
}

State degenerate_tb_field(double alpha0, State xy1) {
  const double a = std::sin(alpha0);
  const double b = std::cos(alpha0);
  const double ch = std::cos(alpha0 / 2.0);
  ModelParams p;
  p.kind = PerturbationKind::quadratic();
  p.alpha0 = alpha0;
  p.epsilon = 1.0;
  p.mu = 0.0;
  p.nu = -1.0 / (2.0 * (1.0 + b));
  const Complex zs = (Complex(a, b) + Complex(0.0, 1.0)) / (2.0 * (1.0 + b));
  const Complex rot = std::polar(1.0, -alpha0);
  const Complex zeta = Complex(xy1.y, 2.0 * xy1.x) * rot;
  const Complex z = zs + zeta / (2.0 * ch);
  const Complex zdot = rhs(p, z);
  const Complex w = std::conj(rot) * (8.0 * ch * ch * ch) * zdot;
  return {0.5 * w.imag(), w.real()};
}

DegenerateTBReport degenerate_tb_check(double alpha0, const DegenerateTBOptions& opt) {
  if (!(alpha0 > 0.0 && alpha0 < kPi / 2.0)) throw std::invalid_argument("degenerate_tb_check: alpha0 out of range");
  if (opt.fit_degree < 2 || opt.fit_degree > BiPoly::kMaxDeg)
    throw std::invalid_argument("degenerate_tb_check: fit_degree must be 2 or 3");
  if (!(opt.radius > 0.0) || opt.rings < 1 || opt.points_per_ring < 4)
    throw std::invalid_argument("degenerate_tb_check: invalid sampling");
  const double R = opt.radius;
  const int deg = opt.fit_degree;
  std::vector<std::pair<int, int>> mons;
  for (int d = 0; d <= deg; ++d)
    for (int j = 0; j <= d; ++j) mons.emplace_back(d - j, j);

  const int npts = opt.rings * opt.points_per_ring;
  Eigen::MatrixXd A(npts, mons.size());
  Eigen::VectorXd bf(npts), bg(npts);
  int row = 0;
  for (int k = 0; k < opt.rings; ++k) {
    const double rr = R * (k + 1) / opt.rings;
    for (int q = 0; q < opt.points_per_ring; ++q) {
      const double th = 2.0 * kPi * (q + 0.5 * (k % 2)) / opt.points_per_ring;
      const double x = rr * std::cos(th), y = rr * std::sin(th);
      for (std::size_t c = 0; c < mons.size(); ++c)
        A(row, c) = std::pow(x / R, mons[c].first) * std::pow(y / R, mons[c].second);
      const State v = degenerate_tb_field(alpha0, {x, y});
      bf(row) = v.x;
      bg(row) = v.y;
      ++row;
    }
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < static_cast<Eigen::Index>(mons.size()))
    throw std::runtime_error("degenerate_tb_check: least-squares fit is rank deficient");
  const Eigen::VectorXd cf = qr.solve(bf);
  const Eigen::VectorXd cg = qr.solve(bg);
  const double res = std::sqrt(((A * cf - bf).squaredNorm() + (A * cg - bg).squaredNorm()) / (2.0 * npts));

  PolyField F;
  for (std::size_t c = 0; c < mons.size(); ++c) {
    const auto [i, j] = mons[c];
    const double s = std::pow(R, -(i + j));
    F.f.c[i][j] = cf(c) * s;
    F.g.c[i][j] = cg(c) * s;
  }
  DegenerateTBReport rep;
  rep.linear_defect = std::abs(F.f.c[1][0]) + std::abs(F.f.c[0][1] - 1.0) + std::abs(F.g.c[1][0]) +
                      std::abs(F.g.c[0][1]) + std::abs(F.f.c[0][0]) + std::abs(F.g.c[0][0]);
  const BTNormalForm nf = bt_normal_form(F);
  rep.quadratic_coeff = nf.a2;
  rep.xy_coeff = nf.b2;
  rep.cubic_coeff = nf.a3;
  rep.fit_residual = res;
  rep.radius = R;
  rep.fit_degree = deg;
  if (opt.hamiltonian) rep.hamiltonian_residual = hamiltonian_return_gap(alpha0, opt.tol);
  return rep;
}

double hamiltonian_return_gap(double alpha0, Tolerances tol) {
  ModelParams p;
  p.kind = PerturbationKind::quadratic();
  p.alpha0 = alpha0;
  p.epsilon = 1.0;
  p.mu = 0.0;
  p.nu = -1.0 / (4.0 * (1.0 + p.b()));
  p.validate();
  const auto eqs = fixed_points(p);
  const Equilibrium* centre = nullptr;
  const Equilibrium* saddle = nullptr;
  for (const auto& e : eqs) {
    if (e.label.kind == LabelKind::Pminus) centre = &e;
    if (e.label.kind == LabelKind::Pplus) saddle = &e;
  }
  if (!centre || !saddle) throw std::runtime_error("hamiltonian_return_gap: P+ / P- not found");
  const State dir = saddle->position - centre->position;
  const double d = dir.norm();
  const double angle = std::atan2(dir.y, dir.x);
  double gap = 0.0;
  for (double f : {0.1, 0.25, 0.4}) {
    const auto ret = first_return(p, centre->position, angle, f * d, 1e4, tol);
    if (!ret) throw std::runtime_error("hamiltonian_return_gap: orbit did not return");
    gap = std::max(gap, std::abs(ret->rho - f * d));
  }
  return gap;
}

}  // namespace imphopf
