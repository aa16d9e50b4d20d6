#include "imphopf/flow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>
#include <thread>

namespace imphopf {

namespace {

struct Field {
  const ModelParams* params;
  double sign;
  State operator()(State s) const {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) return {NAN, NAN};
    return sign * rhs(*params, s);
  }
};

using Stepper = DormandPrince<Field>;

double sign_of(TimeDirection d) { return d == TimeDirection::Forward ? 1.0 : -1.0; }

struct Ray {
  State center;
  State e;  // along the ray
  State n;  // normal

  explicit Ray(State c = {}, double angle = 0.0)
      : center(c), e{std::cos(angle), std::sin(angle)}, n{-std::sin(angle), std::cos(angle)} {}
  double side(State y) const { return n.x * (y.x - center.x) + n.y * (y.y - center.y); }
  double along(State y) const { return e.x * (y.x - center.x) + e.y * (y.y - center.y); }
  State point(double rho) const { return center + rho * e; }
};

struct Crossing {
  double t = 0.0;
  double rho = 0.0;
  int dir = 0;
  State y;
};

// Locates a crossing of the ray inside the last accepted step, if any: the
// Hermite interpolant brackets it, then full Runge-Kutta steps from the
// start of the step polish the time with Newton on the side function.
std::optional<Crossing> detect(const Stepper& st, const Ray& ray) {
  const double s0 = ray.side(st.y_prev());
  const double s1 = ray.side(st.y());
  if (!((s0 < 0.0 && s1 >= 0.0) || (s0 > 0.0 && s1 <= 0.0))) return std::nullopt;
  double ta = st.t_prev();
  double tb = st.t();
  double sa = s0;
  double sb = s1;
  double t = tb;
  for (int i = 0; i < 60; ++i) {
    t = tb - sb * (tb - ta) / (sb - sa);
    if (!(t > ta && t < tb)) t = 0.5 * (ta + tb);
    const double s = ray.side(st.dense(t));
    if (s == 0.0) break;
    if ((s < 0.0) == (sa < 0.0)) {
      ta = t;
      sa = s;
      sb *= 0.5;  // Illinois
    } else {
      tb = t;
      sb = s;
      sa *= 0.5;
    }
    if (tb - ta <= 1e-15 * std::max(1.0, std::abs(t))) break;
  }
  State y = st.dense(t);
  for (int i = 0; i < 3; ++i) {
    const double h = t - st.t_prev();
    if (h <= 0.0) break;
    y = st.step_from_prev(h);
    const State f = st.field()(y);
    const double ds = ray.n.x * f.x + ray.n.y * f.y;
    if (ds == 0.0 || !std::isfinite(ds)) break;
    const double dt = -ray.side(y) / ds;
    t += dt;
    if (std::abs(dt) <= 1e-15 * std::max(1.0, std::abs(t))) {
      y = st.step_from_prev(t - st.t_prev());
      break;
    }
  }
  const double rho = ray.along(y);
  if (!(rho > 0.0)) return std::nullopt;
  return Crossing{t, rho, s1 > s0 ? +1 : -1, y};
}

// Time-ordered crossings within (0, t_end] starting from y0 at t = 0.
std::vector<Crossing> crossings_over(const ModelParams& params, TimeDirection dir, State y0, double t_end,
                                     const Ray& ray, Tolerances tol, std::vector<State>* path = nullptr,
                                     std::vector<double>* times = nullptr) {
  Stepper st(Field{&params, sign_of(dir)}, y0, 0.0, tol);
  std::vector<Crossing> out;
  if (path) {
    path->push_back(y0);
    times->push_back(0.0);
  }
  while (st.t() < t_end) {
    st.step(t_end);
    if (path) {
      path->push_back(st.y());
      times->push_back(st.t());
    }
    if (auto c = detect(st, ray)) out.push_back(*c);
    if (st.y().norm() > 1e6) break;
  }
  return out;
}

// Radius of the crossing nearest to time `period` after starting on the ray
// at radius rho.
std::optional<double> return_radius(const ModelParams& params, TimeDirection dir, const Ray& ray, double rho,
                                    int orientation, double period, Tolerances tol) {
  const auto cs = crossings_over(params, dir, ray.point(rho), 1.5 * period, ray, tol);
  std::optional<double> best;
  double best_gap = INFINITY;
  for (const Crossing& c : cs) {
    if (c.dir != orientation || c.t < 0.5 * period) continue;
    const double gap = std::abs(c.t - period);
    if (gap < best_gap) {
      best_gap = gap;
      best = c.rho;
    }
  }
  return best;
}

double multiplier_fd(const ModelParams& params, TimeDirection dir, const Ray& ray, double rho, int orientation,
                     double period, Tolerances tol) {
  const double h = 1e-6 * std::max(1.0, rho);
  const auto rp = return_radius(params, dir, ray, rho + h, orientation, period, tol);
  const auto rm = return_radius(params, dir, ray, rho - h, orientation, period, tol);
  if (!rp || !rm) return NAN;
  return (*rp - *rm) / (2.0 * h);
}

int winding_about_origin(const std::vector<State>& loop) {
  double total = 0.0;
  for (std::size_t i = 1; i < loop.size(); ++i) {
    const double a0 = std::atan2(loop[i - 1].y, loop[i - 1].x);
    const double a1 = std::atan2(loop[i].y, loop[i].x);
    double d = a1 - a0;
    while (d > kPi) d -= 2.0 * kPi;
    while (d < -kPi) d += 2.0 * kPi;
    total += d;
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

double point_segment_distance(State p, State a, State b) {
  const State ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double s = len2 > 0.0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return distance(p, a + s * ab);
}

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

State Trajectory::at(double t) const {
  if (times.empty()) throw std::out_of_range("Trajectory::at: empty trajectory");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[i - 1];
  const double h = times[i] - t0;
  const double s = (t - t0) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * states[i - 1] + (h10 * h) * rates[i - 1] + h01 * states[i] + (h11 * h) * rates[i];
}

Trajectory integrate(const ModelParams& params, State initial, double t_end, Tolerances tol) {
  IntegrateOptions opt;
  opt.tol = tol;
  return integrate(params, initial, t_end, opt);
}

Trajectory integrate(const ModelParams& params, State initial, double t_end, const IntegrateOptions& opt) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("integrate: t_end must be positive");
  if (!std::isfinite(initial.x) || !std::isfinite(initial.y))
    throw std::domain_error("integrate: non-finite initial state");
  Stepper st(Field{&params, sign_of(opt.direction)}, initial, 0.0, opt.tol);
  st.set_max_step(opt.max_step);
  Trajectory tr;
  tr.params = params;
  tr.direction = opt.direction;
  tr.times.push_back(0.0);
  tr.states.push_back(initial);
  tr.rates.push_back(st.dy());
  while (st.t() < t_end) {
    st.step(t_end);
    tr.times.push_back(st.t());
    tr.states.push_back(st.y());
    tr.rates.push_back(st.dy());
    if (st.y().norm() > opt.escape_radius) {
      tr.stop = StopReason::Escaped;
      break;
    }
    if (opt.settle_speed > 0.0 && st.dy().norm() < opt.settle_speed) {
      tr.stop = StopReason::Settled;
      break;
    }
  }
  return tr;
}

CycleSearch find_limit_cycle(const ModelParams& params, State seed, const CycleOptions& opt) {
  if (!std::isfinite(seed.x) || !std::isfinite(seed.y)) throw std::domain_error("find_limit_cycle: non-finite seed");
  if (!(opt.max_time > opt.transient) || opt.transient < 0.0)
    throw std::invalid_argument("find_limit_cycle: need 0 <= transient < max_time");
  const TimeDirection dir = opt.direction;
  Stepper st(Field{&params, sign_of(dir)}, seed, 0.0, opt.tol);
  CycleSearch res;

  auto finish = [&](CycleSearchStatus s) {
    res.status = s;
    res.tail = st.y();
    res.tail_speed = rhs(params, st.y()).norm();
    res.time_used = st.t();
    return res;
  };
  auto settled = [&] { return st.dy().norm() < 1e-12 * std::max(1.0, st.y().norm()); };

  while (st.t() < opt.transient) {
    st.step(opt.transient);
    if (st.y().norm() > opt.escape_radius) return finish(CycleSearchStatus::Escaped);
    if (settled()) return finish(CycleSearchStatus::FixedPoint);
  }

  State center = opt.center_mode == SectionCenter::Fixed ? opt.center : State{};
  if (opt.center_mode == SectionCenter::Auto) {
    const double window = std::min(200.0, 0.1 * (opt.max_time - opt.transient));
    const double t_stop = st.t() + window;
    State acc{};
    double span = 0.0;
    while (st.t() < t_stop) {
      st.step(t_stop);
      const double h = st.t() - st.t_prev();
      acc = acc + (0.5 * h) * (st.y_prev() + st.y());
      span += h;
      if (st.y().norm() > opt.escape_radius) return finish(CycleSearchStatus::Escaped);
      if (settled()) return finish(CycleSearchStatus::FixedPoint);
    }
    center = (1.0 / span) * acc;
  }
  const Ray ray(center, opt.section_angle);

  std::deque<Crossing> recent;
  std::optional<std::pair<Crossing, Crossing>> match;
  while (st.t() < opt.max_time && !match) {
    st.step(opt.max_time);
    if (st.y().norm() > opt.escape_radius) return finish(CycleSearchStatus::Escaped);
    if (settled()) return finish(CycleSearchStatus::FixedPoint);
    const auto c = detect(st, ray);
    if (!c) continue;
    for (auto it = recent.rbegin(); it != recent.rend(); ++it) {
      if (it->dir != c->dir) continue;
      if (std::abs(it->rho - c->rho) <= opt.match_tol * std::max(1.0, std::abs(c->rho))) {
        match = std::make_pair(*it, *c);
        break;
      }
    }
    recent.push_back(*c);
    if (static_cast<int>(recent.size()) > opt.history) recent.pop_front();
  }
  if (!match) {
    const CycleSearchStatus s = rhs(params, st.y()).norm() < opt.fixed_point_speed ? CycleSearchStatus::FixedPoint
                                                                                     : CycleSearchStatus::HorizonExceeded;
    return finish(s);
  }

  const Crossing start = match->second;
  double period = match->second.t - match->first.t;
  if (period > opt.max_period) return finish(CycleSearchStatus::HorizonExceeded);

  // one more period from the matched crossing, recorded step by step
  std::vector<State> loop;
  std::vector<double> times;
  const auto cs = crossings_over(params, dir, start.y, 1.5 * period, ray, opt.tol, &loop, &times);
  const Crossing* closing = nullptr;
  for (const Crossing& c : cs) {
    if (c.dir != start.dir || c.t < 0.5 * period) continue;
    if (!closing || std::abs(c.t - period) < std::abs(closing->t - period)) closing = &c;
  }
  if (closing) {
    period = closing->t;
    std::size_t keep = 0;
    while (keep < times.size() && times[keep] < period) ++keep;
    loop.resize(keep);
    times.resize(keep);
    loop.push_back(closing->y);
    times.push_back(period);
  }

  // a loop that has shrunk onto a point is a focus, not a cycle
  State mean{};
  for (const State& s : loop) mean = mean + s;
  mean = (1.0 / loop.size()) * mean;
  double spread = 0.0;
  for (const State& s : loop) spread = std::max(spread, distance(s, mean));
  if (spread < 1e-6) return finish(CycleSearchStatus::FixedPoint);

  LimitCycle cyc;
  cyc.period = period;
  cyc.section_angle = opt.section_angle;
  cyc.section_center = center;
  cyc.section_point = start.y;
  double mult = NAN;
  if (opt.compute_floquet) mult = multiplier_fd(params, dir, ray, start.rho, start.dir, period, opt.tol);
  if (dir == TimeDirection::Backward) {
    std::reverse(loop.begin(), loop.end());
    for (double& t : times) t = period - t;
    std::reverse(times.begin(), times.end());
    mult = 1.0 / mult;
  }
  cyc.samples = std::move(loop);
  cyc.times = std::move(times);
  cyc.winding = winding_about_origin(cyc.samples);
  cyc.floquet_magnitude = std::abs(mult);
  if (opt.compute_floquet)
    cyc.stability = cyc.floquet_magnitude < 1.0 - 1e-6 ? CycleStability::Stable : CycleStability::Unstable;
  else
    cyc.stability = dir == TimeDirection::Forward ? CycleStability::Stable : CycleStability::Unstable;
  res.cycle = std::move(cyc);
  return finish(CycleSearchStatus::Found);
}

double floquet_multiplier(const ModelParams& params, const LimitCycle& cycle, Tolerances tol) {
  const Ray ray(cycle.section_center, cycle.section_angle);
  const State f = rhs(params, cycle.section_point);
  const int orientation = ray.n.x * f.x + ray.n.y * f.y > 0.0 ? +1 : -1;
  return multiplier_fd(params, TimeDirection::Forward, ray, ray.along(cycle.section_point), orientation,
                       cycle.period, tol);
}

std::optional<ReturnPoint> first_return(const ModelParams& params, State center, double angle, double rho0,
                                        double t_max, Tolerances tol) {
  const Ray ray(center, angle);
  const State y0 = ray.point(rho0);
  const State f0 = rhs(params, y0);
  const int orientation = ray.n.x * f0.x + ray.n.y * f0.y > 0.0 ? +1 : -1;
  Stepper st(Field{&params, 1.0}, y0, 0.0, tol);
  while (st.t() < t_max) {
    st.step(t_max);
    if (st.y().norm() > 1e6) break;
    const auto c = detect(st, ray);
    if (c && c->dir == orientation && c->t > 1e-9) return ReturnPoint{c->t, c->rho, c->y};
  }
  return std::nullopt;
}

int winding_number(const std::vector<State>& loop, State p) {
  int wn = 0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const State a = loop[i];
    const State b = loop[(i + 1) % n];
    const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && cross > 0.0) ++wn;
    } else {
      if (b.y <= p.y && cross < 0.0) --wn;
    }
  }
  return wn;
}

double divergence_integral(const ModelParams& params, const LimitCycle& cycle) {
  if (cycle.samples.size() < 2) throw std::invalid_argument("divergence_integral: cycle has no samples");
  Trajectory tr;
  tr.times = cycle.times;
  tr.states = cycle.samples;
  for (const State& s : tr.states) tr.rates.push_back(rhs(params, s));
  // composite Simpson on a fine uniform grid of the Hermite interpolant
  const int n = 2 * std::max<int>(2000, static_cast<int>(8 * cycle.samples.size()));
  const double h = cycle.period / n;
  auto div = [&](double t) { return jacobian(params, tr.at(t)).trace(); };
  double acc = div(0.0) + div(cycle.period);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * div(i * h);
  return acc * h / 3.0;
}

bool same_cycle(const LimitCycle& a, const LimitCycle& b, double tol) {
  if (a.samples.size() < 2 || b.samples.size() < 2) return false;
  if (std::abs(a.period - b.period) > 1e-3 * std::max(a.period, b.period)) return false;
  double scale = 1.0;
  for (const State& s : a.samples) scale = std::max(scale, s.norm());
  const std::size_t stride = std::max<std::size_t>(1, a.samples.size() / 32);
  for (std::size_t i = 0; i < a.samples.size(); i += stride) {
    // a chord of b sags off the curve by up to a fraction of its length
    bool near = false;
    for (std::size_t j = 1; j < b.samples.size() && !near; ++j) {
      const double d = point_segment_distance(a.samples[i], b.samples[j - 1], b.samples[j]);
      near = d <= std::max(tol * scale, 0.1 * distance(b.samples[j - 1], b.samples[j]));
    }
    if (!near) return false;
  }
  return true;
}

int Portrait::count_cycles(CycleStability s) const {
  return static_cast<int>(std::count_if(cycles.begin(), cycles.end(), [s](const LimitCycle& c) { return c.stability == s; }));
}

Portrait portrait(const ModelParams& params, const PortraitOptions& opt) {
  Portrait out;
  out.equilibria = fixed_points(params);

  double scale = 0.0;
  for (const Equilibrium& e : out.equilibria) scale = std::max(scale, e.position.norm());
  scale = std::max({scale, std::sqrt(std::hypot(params.mu, params.nu)), 1e-3});

  std::vector<double> radii = opt.ring_radii;
  if (radii.empty()) radii = {0.35 * scale, 0.8 * scale, 1.3 * scale, 2.0 * scale};

  struct Job {
    State seed;
    TimeDirection dir;
  };
  std::vector<Job> jobs;
  for (double r : radii)
    for (int k = 0; k < opt.ring_angles; ++k) {
      const double th = 2.0 * kPi * (k + 0.5) / opt.ring_angles;
      jobs.push_back({State::from_polar(r, th), TimeDirection::Forward});
      if (opt.unstable_cycles) jobs.push_back({State::from_polar(r, th), TimeDirection::Backward});
    }
  // seeds next to equilibria catch small cycles around them
  const double off = 1e-2 * scale;
  for (const Equilibrium& e : out.equilibria) {
    for (int k = 0; k < 4; ++k) {
      const State s = e.position + State::from_polar(off, 0.5 * kPi * k + 0.3);
      jobs.push_back({s, TimeDirection::Forward});
      if (opt.unstable_cycles) jobs.push_back({s, TimeDirection::Backward});
    }
  }

  std::vector<CycleSearch> found(jobs.size());
  parallel_for(jobs.size(), opt.jobs, [&](std::size_t i) {
    CycleOptions co = opt.cycle;
    co.direction = jobs[i].dir;
    co.center_mode = SectionCenter::Auto;
    try {
      found[i] = find_limit_cycle(params, jobs[i].seed, co);
    } catch (const StiffnessFailure&) {
      found[i].status = CycleSearchStatus::Escaped;
    }
  });
  for (const CycleSearch& cs : found) {
    if (!cs.found()) continue;
    bool dup = false;
    for (const LimitCycle& c : out.cycles)
      if (same_cycle(*cs.cycle, c) || same_cycle(c, *cs.cycle)) dup = true;
    if (!dup) out.cycles.push_back(*cs.cycle);
  }

  // separatrices of saddles
  struct SepJob {
    int saddle;
    bool unstable;
    int sign;
    State start;
  };
  std::vector<SepJob> seps;
  for (std::size_t i = 0; i < out.equilibria.size(); ++i) {
    const Equilibrium& e = out.equilibria[i];
    if (e.cls != StabilityClass::Saddle) continue;
    const Matrix2 J = jacobian(params, e.position);
    for (int which = 0; which < 2; ++which) {
      const double lam = e.eigenvalues[which].real();
      State v{J(0, 1), lam - J(0, 0)};
      if (v.norm() < 1e-12) v = State{lam - J(1, 1), J(1, 0)};
      v = (1.0 / v.norm()) * v;
      for (int sgn : {+1, -1})
        seps.push_back({static_cast<int>(i), lam > 0.0, sgn, e.position + (sgn * opt.separatrix_offset) * v});
    }
  }
  out.separatrices.resize(seps.size());
  parallel_for(seps.size(), opt.jobs, [&](std::size_t i) {
    IntegrateOptions io;
    io.tol = opt.cycle.tol;
    io.direction = seps[i].unstable ? TimeDirection::Forward : TimeDirection::Backward;
    io.escape_radius = opt.cycle.escape_radius;
    io.settle_speed = 1e-10;
    Separatrix s{seps[i].saddle, seps[i].unstable, seps[i].sign, {}};
    try {
      s.path = integrate(params, seps[i].start, opt.separatrix_time, io);
    } catch (const StiffnessFailure& f) {
      s.path.params = params;
      s.path.stop = StopReason::Escaped;
      s.path.times = {0.0};
      s.path.states = {f.last_state()};
      s.path.rates = {rhs(params, f.last_state())};
    }
    out.separatrices[i] = std::move(s);
  });

  if (opt.background_grid > 0) {
    const int n = opt.background_grid;
    const double ext = opt.background_extent > 0.0 ? opt.background_extent : 2.0 * scale;
    out.background.resize(static_cast<std::size_t>(n) * n);
    parallel_for(out.background.size(), opt.jobs, [&](std::size_t i) {
      const int ix = static_cast<int>(i) % n;
      const int iy = static_cast<int>(i) / n;
      const double x = n == 1 ? 0.0 : -ext + 2.0 * ext * ix / (n - 1);
      const double y = n == 1 ? 0.0 : -ext + 2.0 * ext * iy / (n - 1);
      IntegrateOptions io;
      io.tol = opt.cycle.tol;
      io.escape_radius = opt.cycle.escape_radius;
      io.settle_speed = 1e-10;
      out.background[i] = integrate(params, {x, y}, opt.background_time, io);
    });
  }
  return out;
}

}  // namespace imphopf
