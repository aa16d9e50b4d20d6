#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "imphopf/curves.hpp"
#include "imphopf/equilibria.hpp"
#include "imphopf/flow.hpp"
#include "imphopf/globalbif.hpp"
#include "imphopf/normalform.hpp"

namespace imphopf::cli {

using nlohmann::json;

namespace {

struct Common {
  std::string kind = "const";
  int m = 0;
  double alpha0_deg = 45.0;
  std::optional<double> mu, nu, u, v;
  double epsilon = 1.0;
  double tol_rel = 1e-10;
  double tol_abs = 1e-12;
  double t_max = 1e4;
  int jobs = 1;
  std::string out;
  std::string format = "json";
};

// Raised for errors in the command line itself (exit code 2).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void add_common(CLI::App* app, Common& c, bool model = true) {
  if (model) {
    app->add_option("--kind", c.kind, "const, z2, z3, zzbar, z2pos or zm")
        ->check(CLI::IsMember({"const", "z2", "z3", "zzbar", "z2pos", "zm"}));
    app->add_option("--m", c.m, "symmetry order for --kind zm (m >= 4)");
    app->add_option("--alpha0", c.alpha0_deg, "tilt angle in degrees, in (0, 90)");
    app->add_option("--mu", c.mu);
    app->add_option("--nu", c.nu);
    app->add_option("--u", c.u);
    app->add_option("--v", c.v);
    app->add_option("--epsilon", c.epsilon, "imperfection amplitude");
  }
  app->add_option("--tol-rel", c.tol_rel);
  app->add_option("--tol-abs", c.tol_abs);
  app->add_option("--t-max", c.t_max, "integration budget");
  app->add_option("--jobs", c.jobs, "worker threads");
  app->add_option("--out", c.out, "output file (default: standard output)");
  app->add_option("--format", c.format)->check(CLI::IsMember({"csv", "json"}));
}

PerturbationKind parse_kind(const Common& c) {
  if (c.kind == "const") return PerturbationKind::constant();
  if (c.kind == "z2") return PerturbationKind::zm(2);
  if (c.kind == "z3") return PerturbationKind::zm(3);
  if (c.kind == "zzbar") return PerturbationKind::mixed();
  if (c.kind == "z2pos") return PerturbationKind::quadratic();
  if (c.kind == "zm") {
    if (c.m < 4) throw UsageError("--kind zm requires --m >= 4");
    return PerturbationKind::zm(c.m);
  }
  throw UsageError("unknown --kind " + c.kind);
}

void validate_common(const Common& c) {
  if (!(c.alpha0_deg > 0.0 && c.alpha0_deg < 90.0)) throw UsageError("--alpha0 must lie in (0, 90) degrees");
  if (!(c.epsilon >= 0.0) || !std::isfinite(c.epsilon)) throw UsageError("--epsilon must be finite and >= 0");
  if (!(c.tol_rel > 0.0) || !(c.tol_abs > 0.0)) throw UsageError("tolerances must be positive");
  if (c.tol_rel < 1e-15) throw UsageError("--tol-rel below 1e-15 is beneath double precision");
  if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) throw UsageError("--t-max must be positive");
  if (c.jobs < 1) throw UsageError("--jobs must be >= 1");
  const bool munu = c.mu || c.nu;
  const bool uv = c.u || c.v;
  if (munu && uv) throw UsageError("give either --mu/--nu or --u/--v, not both");
  for (const auto* p : {&c.mu, &c.nu, &c.u, &c.v})
    if (*p && !std::isfinite(**p)) throw UsageError("parameters must be finite");
}

ModelParams resolve_params(const Common& c) {
  validate_common(c);
  ModelParams p;
  p.kind = parse_kind(c);
  p.alpha0 = c.alpha0_deg * kPi / 180.0;
  p.epsilon = c.epsilon;
  if (c.u || c.v) {
    const MuNu mn = from_uv({c.u.value_or(0.0), c.v.value_or(0.0)}, p.alpha0);
    p.mu = mn.mu;
    p.nu = mn.nu;
  } else {
    p.mu = c.mu.value_or(0.0);
    p.nu = c.nu.value_or(0.0);
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return p;
}

json config_json(const std::string& command, const Common& c, bool model = true) {
  json j;
  j["command"] = command;
  if (model) {
    j["kind"] = c.kind;
    if (c.kind == "zm") j["m"] = c.m;
    j["alpha0_deg"] = c.alpha0_deg;
    j["epsilon"] = c.epsilon;
    if (c.u || c.v) {
      j["u"] = c.u.value_or(0.0);
      j["v"] = c.v.value_or(0.0);
    } else {
      j["mu"] = c.mu.value_or(0.0);
      j["nu"] = c.nu.value_or(0.0);
    }
  }
  j["tol_rel"] = c.tol_rel;
  j["tol_abs"] = c.tol_abs;
  j["t_max"] = c.t_max;
  j["jobs"] = c.jobs;
  j["format"] = c.format;
  if (!c.out.empty()) j["out"] = c.out;
  return j;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

// Writes text to --out (or the default stream).
void emit(const Common& c, std::ostream& out, const std::string& text, const std::string& suffix = "") {
  if (c.out.empty() && suffix.empty()) {
    out << text;
    return;
  }
  if (c.out.empty()) return;  // side files need a base path
  const std::string path = c.out + suffix;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open output file " + path);
  f << text;
}

std::string csv_header(const json& config) {
  return "# format_version=" + std::to_string(kFormatVersion) + "\n# config=" + config.dump() + "\n";
}

json document(const json& config) {
  json j;
  j["format_version"] = kFormatVersion;
  j["config"] = config;
  return j;
}

// ---------------------------------------------------------------------------

json equilibrium_json(const Equilibrium& e) {
  return {{"label", e.label.str()},
          {"x", e.position.x},
          {"y", e.position.y},
          {"r", e.position.r()},
          {"phi", e.position.phi()},
          {"T", e.T},
          {"D", e.D},
          {"Q", e.Q},
          {"eigenvalues", json::array({complex_json(e.eigenvalues[0]), complex_json(e.eigenvalues[1])})},
          {"class", to_string(e.cls)},
          {"branch", e.branch},
          {"merged", e.merged}};
}

void cmd_fixed_points(const Common& c, std::ostream& out) {
  const ModelParams p = resolve_params(c);
  const auto eqs = fixed_points(p);
  const json config = config_json("fixed-points", c);
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(config);
    s << "label,x,y,r,phi,T,D,Q,lambda1_re,lambda1_im,lambda2_re,lambda2_im,class,branch,merged\n";
    for (const auto& e : eqs) {
      s << e.label.str() << ',' << num(e.position.x) << ',' << num(e.position.y) << ',' << num(e.position.r()) << ','
        << num(e.position.phi()) << ',' << num(e.T) << ',' << num(e.D) << ',' << num(e.Q) << ','
        << num(e.eigenvalues[0].real()) << ',' << num(e.eigenvalues[0].imag()) << ','
        << num(e.eigenvalues[1].real()) << ',' << num(e.eigenvalues[1].imag()) << ',' << to_string(e.cls) << ','
        << e.branch << ',' << (e.merged ? 1 : 0) << '\n';
    }
    emit(c, out, s.str());
    return;
  }
  json doc = document(config);
  doc["params"] = {{"mu", p.mu}, {"nu", p.nu}, {"alpha0", p.alpha0}, {"epsilon", p.epsilon}};
  doc["equilibria"] = json::array();
  for (const auto& e : eqs) doc["equilibria"].push_back(equilibrium_json(e));
  emit(c, out, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct CurvesArgs {
  double chord_tol = 1e-4;
  double extent = 4.0;
  double u_lo = 0.0;
  double u_hi = 2.0;
  bool refine = false;
  int samples = 41;
};

void cmd_curves(const Common& c, const CurvesArgs& a, std::ostream& out) {
  const ModelParams p = resolve_params(c);
  if (!(a.chord_tol > 0.0) || !(a.extent > 0.0)) throw UsageError("--chord-tol and --extent must be positive");
  json config = config_json("curves", c);
  config["chord_tol"] = a.chord_tol;
  config["extent"] = a.extent;

  CurveSet set;
  double scale = 1.0;
  std::optional<TBMinusBranch> tb_branch;
  const bool horn = p.kind.tag() == PerturbationTag::ZmResidual && p.kind.m() >= 4;
  if (horn) {
    if (!(p.epsilon > 0.0)) throw UsageError("--kind zm requires --epsilon > 0");
    if (!(a.u_hi > a.u_lo) || a.u_lo < 0.0 || a.samples < 2) throw UsageError("invalid horn range");
    config["u_lo"] = a.u_lo;
    config["u_hi"] = a.u_hi;
    config["refine"] = a.refine;
    config["samples"] = a.samples;
    const HornBoundary h = zm_horn(p.kind.m(), p.epsilon, a.u_lo, a.u_hi, a.refine, p.alpha0, a.samples);
    set.curves = {h.upper, h.lower};
  } else {
    SampleOptions so;
    so.chord_tol = a.chord_tol;
    so.extent = a.extent;
    set = curves_for(p.kind, p.alpha0, so);
    if (p.kind == PerturbationKind::constant()) tb_branch = codim2_const(p.alpha0).tb_minus_branch;
    if (p.epsilon != 1.0) {
      if (!(p.epsilon > 0.0)) throw UsageError("curves require --epsilon > 0");
      scale = rescale_epsilon(p).param_scale;
    }
  }
  auto uv_of = [&](MuNu q) { return to_uv(q, p.alpha0); };

  json index = document(config);
  index["param_scale"] = scale;
  index["points"] = json::array();
  for (const auto& pt : set.points) {
    const MuNu q{pt.location.mu * scale, pt.location.nu * scale};
    const UVPoint w = uv_of(q);
    json jp = {{"kind", to_string(pt.kind)}, {"mu", q.mu}, {"nu", q.nu}, {"u", w.u}, {"v", w.v},
               {"degenerate", pt.degenerate}};
    jp["curve_parameter"] = std::isnan(pt.curve_parameter) ? json(nullptr) : json(pt.curve_parameter);
    index["points"].push_back(jp);
  }
  if (tb_branch) {
    const char* names[] = {"SNminus", "SN0", "Cusp"};
    index["tb_minus_branch"] = names[static_cast<int>(*tb_branch)];
  }

  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(config) << "kind,param,mu,nu,u,v\n";
    for (const auto& cv : set.curves)
      for (std::size_t i = 0; i < cv.samples.size(); ++i) {
        const MuNu q{cv.samples[i].mu * scale, cv.samples[i].nu * scale};
        const UVPoint w = uv_of(q);
        s << to_string(cv.kind) << ',' << num(cv.params[i]) << ',' << num(q.mu) << ',' << num(q.nu) << ','
          << num(w.u) << ',' << num(w.v) << '\n';
      }
    for (const auto& jp : index["points"]) {
      const double cp = jp["curve_parameter"].is_null() ? NAN : jp["curve_parameter"].get<double>();
      s << jp["kind"].get<std::string>() << ',' << num(cp) << ',' << num(jp["mu"].get<double>()) << ','
        << num(jp["nu"].get<double>()) << ',' << num(jp["u"].get<double>()) << ',' << num(jp["v"].get<double>())
        << '\n';
    }
    index["curves"] = json::array();
    for (const auto& cv : set.curves)
      index["curves"].push_back({{"kind", to_string(cv.kind)},
                                 {"param_lo", cv.param_lo},
                                 {"param_hi", cv.param_hi},
                                 {"samples", cv.samples.size()}});
    emit(c, out, s.str());
    emit(c, out, index.dump(2) + "\n", ".json");
    return;
  }
  index["curves"] = json::array();
  for (const auto& cv : set.curves) {
    json rows = json::array();
    for (std::size_t i = 0; i < cv.samples.size(); ++i) {
      const MuNu q{cv.samples[i].mu * scale, cv.samples[i].nu * scale};
      const UVPoint w = uv_of(q);
      rows.push_back(json::array({cv.params[i], q.mu, q.nu, w.u, w.v}));
    }
    index["curves"].push_back({{"kind", to_string(cv.kind)},
                               {"param_lo", cv.param_lo},
                               {"param_hi", cv.param_hi},
                               {"columns", json::array({"param", "mu", "nu", "u", "v"})},
                               {"samples", rows}});
  }
  emit(c, out, index.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct PortraitArgs {
  int grid = 0;
  double extent = 0.0;
  int ring_angles = 8;
  double background_time = 50.0;
  double separatrix_time = 200.0;
  double transient = 500.0;
  bool no_unstable = false;
};

json cycle_json(const LimitCycle& cy) {
  return {{"period", cy.period},
          {"stability", cy.stability == CycleStability::Stable ? "stable" : "unstable"},
          {"winding", cy.winding},
          {"floquet_magnitude", cy.floquet_magnitude},
          {"section_point", json::array({cy.section_point.x, cy.section_point.y})},
          {"samples", cy.samples.size()}};
}

void cmd_portrait(const Common& c, const PortraitArgs& a, std::ostream& out) {
  const ModelParams p = resolve_params(c);
  if (a.grid < 0 || a.ring_angles < 1 || !(a.background_time > 0.0) || !(a.separatrix_time > 0.0) ||
      !(a.transient >= 0.0) || a.extent < 0.0)
    throw UsageError("invalid portrait options");
  PortraitOptions po;
  po.ring_angles = a.ring_angles;
  po.background_grid = a.grid;
  po.background_extent = a.extent;
  po.background_time = a.background_time;
  po.separatrix_time = a.separatrix_time;
  po.unstable_cycles = !a.no_unstable;
  po.jobs = c.jobs;
  po.cycle.tol = {c.tol_rel, c.tol_abs};
  po.cycle.max_time = c.t_max;
  po.cycle.transient = std::min(a.transient, 0.5 * c.t_max);
  const Portrait pr = portrait(p, po);

  json config = config_json("portrait", c);
  config["grid"] = a.grid;
  config["extent"] = a.extent;
  config["ring_angles"] = a.ring_angles;
  config["background_time"] = a.background_time;
  config["separatrix_time"] = a.separatrix_time;
  config["transient"] = po.cycle.transient;
  config["unstable_cycles"] = po.unstable_cycles;

  json doc = document(config);
  doc["equilibria"] = json::array();
  for (const auto& e : pr.equilibria) doc["equilibria"].push_back(equilibrium_json(e));
  doc["cycles"] = json::array();
  for (const auto& cy : pr.cycles) doc["cycles"].push_back(cycle_json(cy));
  doc["separatrices"] = json::array();
  for (const auto& s : pr.separatrices)
    doc["separatrices"].push_back({{"saddle", s.saddle},
                                   {"manifold", s.unstable ? "unstable" : "stable"},
                                   {"sign", s.sign},
                                   {"samples", s.path.states.size()}});
  doc["background"] = pr.background.size();
  doc["counts"] = {{"equilibria", pr.equilibria.size()},
                   {"stable_cycles", pr.count_cycles(CycleStability::Stable)},
                   {"unstable_cycles", pr.count_cycles(CycleStability::Unstable)}};

  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(config) << "trajectory,role,index,t,x,y\n";
    int id = 0;
    auto rows = [&](const std::string& role, int index, const std::vector<double>& ts,
                    const std::vector<State>& ys) {
      for (std::size_t i = 0; i < ys.size(); ++i)
        s << id << ',' << role << ',' << index << ',' << num(ts[i]) << ',' << num(ys[i].x) << ',' << num(ys[i].y)
          << '\n';
      ++id;
    };
    for (std::size_t i = 0; i < pr.cycles.size(); ++i)
      rows("cycle", static_cast<int>(i), pr.cycles[i].times, pr.cycles[i].samples);
    for (std::size_t i = 0; i < pr.separatrices.size(); ++i)
      rows("separatrix", static_cast<int>(i), pr.separatrices[i].path.times, pr.separatrices[i].path.states);
    for (std::size_t i = 0; i < pr.background.size(); ++i)
      rows("background", static_cast<int>(i), pr.background[i].times, pr.background[i].states);
    emit(c, out, s.str());
    emit(c, out, doc.dump(2) + "\n", ".json");
    return;
  }
  auto path_json = [](const std::vector<double>& ts, const std::vector<State>& ys) {
    json rows = json::array();
    for (std::size_t i = 0; i < ys.size(); ++i) rows.push_back(json::array({ts[i], ys[i].x, ys[i].y}));
    return rows;
  };
  for (std::size_t i = 0; i < pr.cycles.size(); ++i)
    doc["cycles"][i]["path"] = path_json(pr.cycles[i].times, pr.cycles[i].samples);
  for (std::size_t i = 0; i < pr.separatrices.size(); ++i)
    doc["separatrices"][i]["path"] = path_json(pr.separatrices[i].path.times, pr.separatrices[i].path.states);
  json bg = json::array();
  for (const auto& t : pr.background) bg.push_back(path_json(t.times, t.states));
  doc["background"] = bg;
  emit(c, out, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

json fit_json(const PeriodScalingFit& f) {
  return {{"model", to_string(f.model)},         {"mu_c", f.mu_c},
          {"coeff", f.coeff},                    {"offset", f.offset},
          {"rms_residual", f.rms_residual},      {"window", json::array({f.window_lo, f.window_hi})},
          {"iterations", f.iterations},          {"converged", f.converged}};
}

json windows_json(const WindowFits& w) {
  return {{"near", {{"count", w.near_count}, {"sqrt", fit_json(w.near_sqrt)}, {"log", fit_json(w.near_log)}}},
          {"far", {{"count", w.far_count}, {"sqrt", fit_json(w.far_sqrt)}, {"log", fit_json(w.far_log)}}}};
}

struct BoundaryArgs {
  std::optional<double> from_mu, from_nu, to_mu, to_nu;
  double max_period = 1e4;
  double bracket_tol = 1e-6;
  double transient = 500.0;
  int period_samples = 24;
  double period_span = 0.2;
  bool no_classify = false;
};

void cmd_boundary(Common c, const BoundaryArgs& a, std::ostream& out) {
  if (!a.from_mu || !a.from_nu || !a.to_mu || !a.to_nu)
    throw UsageError("boundary requires --from-mu, --from-nu, --to-mu and --to-nu");
  if (c.mu || c.nu || c.u || c.v) throw UsageError("boundary takes the path endpoints, not --mu/--nu/--u/--v");
  if (c.t_max == 1e4) c.t_max = 2e4;
  const ModelParams base = resolve_params(c);
  if (!(a.max_period > 0.0) || !(a.bracket_tol > 0.0) || !(a.transient >= 0.0) || a.period_samples < 10 ||
      !(a.period_span > 0.0))
    throw UsageError("invalid boundary options");
  for (double x : {*a.from_mu, *a.from_nu, *a.to_mu, *a.to_nu})
    if (!std::isfinite(x)) throw UsageError("path endpoints must be finite");
  ParamPath path{base, {*a.from_mu, *a.from_nu}, {*a.to_mu, *a.to_nu}};
  if (!(path.length() > 0.0)) throw UsageError("path endpoints coincide");
  BoundaryOptions bo;
  bo.cycle.tol = {c.tol_rel, c.tol_abs};
  bo.cycle.max_time = c.t_max;
  bo.cycle.transient = a.transient;
  bo.max_period = a.max_period;
  bo.bracket_tol = a.bracket_tol;
  bo.period_samples = a.period_samples;
  bo.period_span = a.period_span;
  bo.classify = !a.no_classify;
  const BoundaryPoint bp = locate_boundary(path, bo);

  json config = config_json("boundary", c);
  config["from"] = {*a.from_mu, *a.from_nu};
  config["to"] = {*a.to_mu, *a.to_nu};
  config["max_period"] = a.max_period;
  config["bracket_tol"] = a.bracket_tol;
  config["transient"] = a.transient;
  config["period_samples"] = a.period_samples;
  config["period_span"] = a.period_span;
  config["classify"] = bo.classify;

  json doc = document(config);
  doc["location"] = {{"mu", bp.location.mu}, {"nu", bp.location.nu}};
  doc["bracket"] = {{"lo", {bp.bracket_lo.mu, bp.bracket_lo.nu}},
                    {"hi", {bp.bracket_hi.mu, bp.bracket_hi.nu}},
                    {"s_lo", bp.s_lo},
                    {"s_hi", bp.s_hi},
                    {"width", bp.bracket_width}};
  doc["converged"] = bp.converged;
  doc["horizon"] = bp.horizon;
  doc["type_guess"] = to_string(bp.type_guess);
  const BoundaryEvidence& ev = bp.evidence;
  json e = {{"period_diverges", ev.period_diverges},
            {"sn_gap", ev.sn_gap},
            {"sqrt_dominates_near", ev.sqrt_dominates_near},
            {"sqrt_dominates_far", ev.sqrt_dominates_far},
            {"symmetric_saddles", ev.symmetric_saddles}};
  if (ev.s_saddle_node) {
    const ModelParams q = path.at(*ev.s_saddle_node);
    e["saddle_node"] = {{"s", *ev.s_saddle_node}, {"mu", q.mu}, {"nu", q.nu}};
  } else {
    e["saddle_node"] = nullptr;
  }
  e["saddle_lambda"] = ev.saddle_lambda ? json(*ev.saddle_lambda) : json(nullptr);
  e["fits"] = ev.fits ? windows_json(*ev.fits) : json(nullptr);
  doc["evidence"] = e;
  json periods = json::array();
  for (const auto& s : bp.periods) periods.push_back(json::array({s.mu, s.period}));
  doc["periods"] = {{"columns", json::array({"distance", "period"})}, {"samples", periods}};
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(config) << "distance,period\n";
    for (const auto& q : bp.periods) s << num(q.mu) << ',' << num(q.period) << '\n';
    emit(c, out, s.str());
    emit(c, out, doc.dump(2) + "\n", ".json");
    return;
  }
  emit(c, out, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string model = "both";
  std::optional<double> mu_c;
};

std::vector<PeriodSample> read_samples(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + path);
  std::vector<PeriodSample> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y)) {
      if (out.empty()) continue;  // header
      throw UsageError("malformed sample line: " + line);
    }
    out.push_back({x, y});
  }
  return out;
}

void cmd_period_fit(const Common& c, const FitArgs& a, std::ostream& out) {
  validate_common(c);
  if (a.input.empty()) throw UsageError("period-fit requires --input");
  const auto samples = read_samples(a.input);
  json config = config_json("period-fit", c, false);
  config["input"] = a.input;
  config["model"] = a.model;
  if (a.mu_c) config["mu_c"] = *a.mu_c;
  json doc = document(config);
  doc["samples"] = samples.size();
  json fits = json::array();
  std::optional<PeriodScalingFit> best;
  for (ScalingModel m : {ScalingModel::SqrtLaw, ScalingModel::LogLaw}) {
    if (a.model != "both" && a.model != to_string(m)) continue;
    const PeriodScalingFit f = fit_period_scaling(samples, m);
    fits.push_back(fit_json(f));
    if (!best || f.rms_residual < best->rms_residual) best = f;
  }
  doc["fits"] = fits;
  doc["best"] = to_string(best->model);
  if (samples.size() >= 17) {
    const double mu_c = a.mu_c.value_or(best->mu_c);
    try {
      doc["windows"] = windows_json(fit_windows(samples, mu_c));
    } catch (const std::invalid_argument&) {
      doc["windows"] = nullptr;
    }
  }
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(config) << "model,mu_c,coeff,offset,rms_residual,converged\n";
    for (const auto& f : fits)
      s << f["model"].get<std::string>() << ',' << num(f["mu_c"].get<double>()) << ','
        << num(f["coeff"].get<double>()) << ',' << num(f["offset"].get<double>()) << ','
        << num(f["rms_residual"].get<double>()) << ',' << (f["converged"].get<bool>() ? 1 : 0) << '\n';
    emit(c, out, s.str());
    return;
  }
  emit(c, out, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct WidthArgs {
  std::vector<double> d{1.0, 2.0, 4.0};
  bool measure = false;
};

void cmd_width(const Common& c, const WidthArgs& a, std::ostream& out) {
  Common cc = c;
  const ModelParams p = resolve_params(cc);
  if (!(p.epsilon > 0.0)) throw UsageError("width requires --epsilon > 0");
  for (double d : a.d)
    if (!(d > 0.0) || !std::isfinite(d)) throw UsageError("--d values must be positive");
  std::vector<double> measured(a.d.size(), NAN);
  std::vector<PinningBand> bands(a.d.size());
  if (a.measure) {
    std::vector<std::exception_ptr> errs(a.d.size());
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(c.jobs, static_cast<int>(a.d.size()));
    auto work = [&] {
      for (std::size_t i = next++; i < a.d.size(); i = next++) {
        try {
          bands[i] = measure_pinning_band(p.kind, a.d[i], p.epsilon, p.alpha0);
          measured[i] = bands[i].width();
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  json config = config_json("width", c);
  config.erase("mu");
  config.erase("nu");
  config["d"] = a.d;
  config["measure"] = a.measure;
  json doc = document(config);
  doc["rows"] = json::array();
  std::ostringstream s;
  s << csv_header(config) << "d,predicted,measured,v_lower,v_upper\n";
  for (std::size_t i = 0; i < a.d.size(); ++i) {
    const double w = pinning_width(p.kind, a.d[i], p.epsilon);
    json row = {{"d", a.d[i]}, {"predicted", w}};
    row["measured"] = a.measure ? json(measured[i]) : json(nullptr);
    if (a.measure) row["band"] = {bands[i].v_lower, bands[i].v_upper};
    doc["rows"].push_back(row);
    s << num(a.d[i]) << ',' << num(w) << ',' << num(measured[i]) << ','
      << num(a.measure ? bands[i].v_lower : NAN) << ',' << num(a.measure ? bands[i].v_upper : NAN) << '\n';
  }
  emit(c, out, c.format == "csv" ? s.str() : doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct CanonArgs {
  std::optional<double> a, b;
};

void cmd_canonicalize(const Common& c, const CanonArgs& a, std::ostream& out) {
  if (!a.a || !a.b) throw UsageError("canonicalize requires --a and --b");
  if (c.u || c.v) throw UsageError("canonicalize takes --mu/--nu");
  if (!(c.epsilon >= 0.0)) throw UsageError("--epsilon must be >= 0");
  const double norm = std::hypot(*a.a, *a.b);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw UsageError("--a/--b must be finite and not both zero");
  SignTransform t;
  try {
    t = canonicalize_signs(*a.a / norm, *a.b / norm);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Common cc = c;
  cc.alpha0_deg = t.alpha0 * 180.0 / kPi;
  const PerturbationKind kind = parse_kind(cc);
  const ModelParams p = canonical_params(t, c.mu.value_or(0.0), c.nu.value_or(0.0), c.epsilon, kind);
  json config = config_json("canonicalize", c);
  config.erase("alpha0_deg");
  config["a"] = *a.a;
  config["b"] = *a.b;
  json doc = document(config);
  doc["alpha0"] = t.alpha0;
  doc["alpha0_deg"] = t.alpha0 * 180.0 / kPi;
  doc["time_reversed"] = t.time_reversed;
  doc["conjugated"] = t.conjugated;
  doc["canonical"] = {{"mu", p.mu}, {"nu", p.nu}, {"epsilon", p.epsilon}};
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(config) << "alpha0,time_reversed,conjugated,mu,nu\n"
      << num(t.alpha0) << ',' << (t.time_reversed ? 1 : 0) << ',' << (t.conjugated ? 1 : 0) << ',' << num(p.mu)
      << ',' << num(p.nu) << '\n';
    emit(c, out, s.str());
    return;
  }
  emit(c, out, doc.dump(2) + "\n");
}

void error_record(std::ostream& err, int code, const std::string& kind, const std::string& msg) {
  json j = {{"error", {{"exit_code", code}, {"kind", kind}, {"message", msg}}}};
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perturbed zero-frequency Hopf normal forms", "imphopf-cli"};
  app.require_subcommand(1);

  Common c_fp, c_cv, c_pt, c_bd, c_pf, c_wd, c_cn;
  CurvesArgs curves_args;
  PortraitArgs portrait_args;
  BoundaryArgs boundary_args;
  FitArgs fit_args;
  WidthArgs width_args;
  CanonArgs canon_args;

  auto* fp = app.add_subcommand("fixed-points", "equilibria with invariants and classes");
  add_common(fp, c_fp);

  auto* cv = app.add_subcommand("curves", "analytic bifurcation curves and codimension-two points");
  add_common(cv, c_cv);
  cv->add_option("--chord-tol", curves_args.chord_tol);
  cv->add_option("--extent", curves_args.extent, "truncation of unbounded curves");
  cv->add_option("--u-lo", curves_args.u_lo, "horn range (zm)");
  cv->add_option("--u-hi", curves_args.u_hi, "horn range (zm)");
  cv->add_option("--samples", curves_args.samples, "horn samples (zm)");
  cv->add_flag("--refine", curves_args.refine, "refine horn samples by bisection (zm)");

  auto* pt = app.add_subcommand("portrait", "phase portrait: equilibria, cycles, separatrices");
  add_common(pt, c_pt);
  pt->add_option("--grid", portrait_args.grid, "background trajectories per side");
  pt->add_option("--extent", portrait_args.extent, "background half width");
  pt->add_option("--ring-angles", portrait_args.ring_angles);
  pt->add_option("--background-time", portrait_args.background_time);
  pt->add_option("--separatrix-time", portrait_args.separatrix_time);
  pt->add_option("--transient", portrait_args.transient);
  pt->add_flag("--no-unstable", portrait_args.no_unstable, "skip reverse-time cycle search");

  auto* bd = app.add_subcommand("boundary", "cycle-loss boundary along a straight parameter path");
  add_common(bd, c_bd);
  bd->add_option("--from-mu", boundary_args.from_mu);
  bd->add_option("--from-nu", boundary_args.from_nu);
  bd->add_option("--to-mu", boundary_args.to_mu);
  bd->add_option("--to-nu", boundary_args.to_nu);
  bd->add_option("--max-period", boundary_args.max_period);
  bd->add_option("--bracket-tol", boundary_args.bracket_tol);
  bd->add_option("--transient", boundary_args.transient);
  bd->add_option("--period-samples", boundary_args.period_samples);
  bd->add_option("--period-span", boundary_args.period_span);
  bd->add_flag("--no-classify", boundary_args.no_classify);

  auto* pf = app.add_subcommand("period-fit", "square-root and logarithmic period fits");
  add_common(pf, c_pf, false);
  pf->add_option("--input", fit_args.input, "CSV of (mu, period)");
  pf->add_option("--model", fit_args.model)->check(CLI::IsMember({"sqrt", "log", "both"}));
  pf->add_option("--mu-c", fit_args.mu_c, "window split reference");

  auto* wd = app.add_subcommand("width", "pinning width along L");
  add_common(wd, c_wd);
  wd->add_option("--d", width_args.d, "distances along L")->delimiter(',');
  wd->add_flag("--measure", width_args.measure, "also measure by bisection");

  auto* cn = app.add_subcommand("canonicalize", "sign reduction of the tilt c = a + i b");
  add_common(cn, c_cn);
  cn->add_option("--a", canon_args.a);
  cn->add_option("--b", canon_args.b);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    error_record(err, kUsage, "usage", e.what());
    return kUsage;
  }

  try {
    if (*fp) cmd_fixed_points(c_fp, out);
    if (*cv) cmd_curves(c_cv, curves_args, out);
    if (*pt) cmd_portrait(c_pt, portrait_args, out);
    if (*bd) cmd_boundary(c_bd, boundary_args, out);
    if (*pf) cmd_period_fit(c_pf, fit_args, out);
    if (*wd) cmd_width(c_wd, width_args, out);
    if (*cn) cmd_canonicalize(c_cn, canon_args, out);
  } catch (const UsageError& e) {
    error_record(err, kUsage, "validation", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    error_record(err, kUsage, "validation", e.what());
    return kUsage;
  } catch (const StiffnessFailure& e) {
    error_record(err, kNumerical, "stiffness", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    error_record(err, kNumerical, "numerical", e.what());
    return kNumerical;
  }
  return kOk;
}

}  // namespace imphopf::cli
