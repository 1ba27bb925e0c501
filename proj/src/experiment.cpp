#include "kdvlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <set>

#include "kdvlab/error.hpp"

namespace kdvlab {

ValidationError::ValidationError(std::vector<std::string> errors)
    : InvalidArgument([&] {
        std::string m = "invalid config:";
        for (const auto& e : errors) m += "\n  " + e;
        return m;
      }()),
      errors_(std::move(errors)) {}

namespace {

constexpr std::pair<ExperimentKind, const char*> kKinds[] = {
    {ExperimentKind::spectrum, "spectrum"}, {ExperimentKind::actions, "actions"},
    {ExperimentKind::evolve, "evolve"},     {ExperimentKind::perturb, "perturb"},
    {ExperimentKind::ensemble, "ensemble"}, {ExperimentKind::resonance, "resonance"},
    {ExperimentKind::scaling, "scaling"},   {ExperimentKind::measure, "measure"},
};

// Reads the members of one JSON object, remembering which keys were used.
class Reader {
 public:
  Reader(const Json& j, std::string where, std::vector<std::string>& errors)
      : j_(j), where_(std::move(where)), errors_(errors) {
    if (!j_.is_object()) fail("", "must be an object");
  }
  ~Reader() {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) fail(k, "unknown key");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  void get(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (v.is_number()) {
      out = v.get<double>();
    } else if (v.is_string() && (v == "inf" || v == "infinity")) {
      out = std::numeric_limits<double>::infinity();
    } else {
      fail(key, "must be a number");
    }
  }
  void get(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (v.is_number_integer()) out = v.get<int>();
    else fail(key, "must be an integer");
  }
  void get(const std::string& key, unsigned& out) {
    std::uint64_t x = out;
    get(key, x);
    out = static_cast<unsigned>(x);
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) out = v.get<std::uint64_t>();
    else fail(key, "must be a non-negative integer");
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (v.is_boolean()) out = v.get<bool>();
    else fail(key, "must be true or false");
  }
  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (v.is_string()) out = v.get<std::string>();
    else fail(key, "must be a string");
  }
  template <class T>
  void get(const std::string& key, std::vector<T>& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    bool ok = v.is_array();
    if (ok) {
      for (const auto& x : v) ok = ok && (std::is_integral_v<T> ? x.is_number_integer() : x.is_number());
    }
    if (ok) out = v.get<std::vector<T>>();
    else fail(key, std::is_integral_v<T> ? "must be an array of integers" : "must be an array of numbers");
  }
  const Json* object(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }
  const Json* array(const std::string& key) {
    if (!has(key)) return nullptr;
    if (!j_.at(key).is_array()) {
      fail(key, "must be an array");
      return nullptr;
    }
    return &j_.at(key);
  }
  void fail(const std::string& key, const std::string& what) {
    std::string path = where_;
    if (!key.empty()) path += path.empty() ? key : "." + key;
    errors_.push_back((path.empty() ? "config" : path) + ": " + what);
  }
  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  const Json& j_;
  std::string where_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKinds)
    if (kind == k) return name;
  return "?";
}

ExperimentConfig parse_config(const Json& j) {
  std::vector<std::string> errors;
  ExperimentConfig c;
  c.raw = j;
  c.averaging.averaging.n_max = 0;
  {
    Reader r(j, "", errors);
    if (!j.is_object()) throw ValidationError(errors);
    std::string kind;
    r.get("experiment", kind);
    bool found = false;
    for (const auto& [k, name] : kKinds) {
      if (kind == name) {
        c.kind = k;
        found = true;
      }
    }
    if (!found) r.fail("experiment", "must be one of spectrum, actions, evolve, perturb, ensemble, resonance, scaling, measure");
    r.get("K", c.K);
    c.N = 4 * c.K;
    r.get("N", c.N);
    r.get("n_max", c.n_max);
    r.get("epsilon", c.epsilon);
    r.get("T", c.T);
    r.get("T_slow", c.T_slow);
    r.get("dt", c.dt);
    r.get("seed", c.seed);
    r.get("output", c.output);
    r.get("z", c.z);
    r.get("sample_every", c.sample_every);
    r.get("samples", c.samples);
    r.get("realizations", c.realizations);
    r.get("angle_every", c.angle_every);
    r.get("angle_modes", c.angle_modes);
    r.get("threads", c.threads);
    r.get("lambdas", c.lambdas);
    r.get("sobolev_k", c.sobolev_k);
    r.get("K_list", c.K_list);
    r.get("probe_modes", c.probe_modes);
    r.get("frequencies", c.frequencies);
    if (c.frequencies != "model" && c.frequencies != "empirical") r.fail("frequencies", "must be 'model' or 'empirical'");
    const bool K_ok = c.K >= 1 && c.K <= 4096;

    if (const Json* p = r.object("perturbation")) {
      Reader q(*p, "perturbation", errors);
      std::string kind = "none";
      q.get("kind", kind);
      try {
        c.perturbation.kind = perturbation_kind_from_string(kind);
      } catch (const InvalidArgument&) {
        q.fail("kind", "must be none, dissipative, external_force or smoothing_map");
      }
      q.get("kernel_decay", c.perturbation.kernel_decay);
      q.get("power", c.perturbation.power);
      if (const Json* f = q.array("force")) {
        if (K_ok && c.N > 0) {
          try {
            c.perturbation.force = field_from_json(Json{{"K", c.K}, {"N", c.N}, {"modes", *f}});
          } catch (const Error& e) {
            q.fail("force", e.what());
          }
        }
      }
    }
    if (const Json* p = r.object("noise")) {
      Reader q(*p, "noise", errors);
      NoiseSpec s;
      q.get("law", s.law);
      q.get("amplitude", s.amplitude);
      q.get("decay", s.decay);
      q.get("b", s.b);
      if (s.law == "power") {
        if (q.has("b")) q.fail("b", "not allowed with law 'power'");
        s = NoiseSpec::power_law(K_ok ? c.K : 1, s.amplitude, s.decay);
      } else if (s.law != "explicit") {
        q.fail("law", "must be 'explicit' or 'power'");
      }
      c.noise = s;
    }
    if (const Json* p = r.object("measure")) {
      Reader q(*p, "measure", errors);
      GaussianMeasureSpec s;
      q.get("law", s.law);
      q.get("amplitude", s.amplitude);
      q.get("exponent", s.exponent);
      q.get("zeta_prime", s.zeta_prime);
      q.get("p", s.p);
      q.get("sigma", s.sigma);
      if (s.law == "power") {
        if (q.has("sigma")) q.fail("sigma", "not allowed with law 'power'");
        s = GaussianMeasureSpec::power_law(K_ok ? c.K : 1, s.amplitude, s.exponent, s.zeta_prime, s.p);
      } else if (s.law != "explicit") {
        q.fail("law", "must be 'explicit' or 'power'");
      }
      c.measure = s;
    }
    if (const Json* p = r.object("resonance")) {
      Reader q(*p, "resonance", errors);
      q.get("delta", c.resonance.delta);
      q.get("m", c.resonance.m);
      q.get("K", c.resonance.K);
    }
    if (const Json* p = r.object("initial")) {
      Reader q(*p, "initial", errors);
      q.get("kind", c.initial.kind);
      q.get("h1_norm", c.initial.h1_norm);
      q.get("path", c.initial.path);
      if (const Json* m = q.array("modes")) {
        for (const auto& e : *m) {
          if (e.is_array() && e.size() == 2 && e[0].is_number_integer() && e[1].is_number())
            c.initial.modes.emplace_back(e[0].get<int>(), e[1].get<double>());
          else
            q.fail("modes", "entries are [signed k, value]");
        }
      }
      const std::set<std::string> kinds{"zero", "modes", "gaussian", "file"};
      if (!kinds.count(c.initial.kind)) q.fail("kind", "must be zero, modes, gaussian or file");
    }
    if (const Json* p = r.object("tolerances")) {
      Reader q(*p, "tolerances", errors);
      q.get("percival", c.tolerances.percival);
      q.get("conservation", c.tolerances.conservation);
      q.get("action_rtol", c.tolerances.action_rtol);
      q.get("hill_rtol", c.tolerances.hill_rtol);
    }
    if (const Json* p = r.object("averaging")) {
      Reader q(*p, "averaging", errors);
      q.get("T_avg", c.averaging.averaging.T_avg);
      q.get("snapshots", c.averaging.averaging.snapshots);
      q.get("panels", c.averaging.panels);
      q.get("nodes", c.averaging.nodes);
      q.get("panel_growth", c.averaging.panel_growth);
      q.get("window_dt", c.averaging.averaging.dt);
    }
  }
  if (c.averaging.averaging.n_max == 0) c.averaging.averaging.n_max = c.n_max;
  c.averaging.dt = c.dt;
  c.perturbation.epsilon = c.epsilon;
  if (errors.empty()) {
    auto more = validate(c);
    errors.insert(errors.end(), more.begin(), more.end());
  }
  if (!errors.empty()) throw ValidationError(errors);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError({std::string("config is not valid JSON: ") + e.what()});
  }
  return parse_config(j);
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> e;
  auto need = [&e](bool ok, const std::string& msg) {
    if (!ok) e.push_back(msg);
  };
  need(c.K >= 1 && c.K <= 4096, "K: must be in 1..4096");
  need(c.N >= 3 * c.K, "N: must satisfy N >= 3K (got N = " + std::to_string(c.N) + ", K = " + std::to_string(c.K) + ")");
  need(c.N % 2 == 0, "N: must be even");
  need(c.n_max >= 0 && c.n_max <= 200, "n_max: must be in 0..200");
  need(std::isfinite(c.epsilon) && c.epsilon >= 0.0, "epsilon: must be finite and >= 0");
  need(std::isfinite(c.T) && c.T >= 0.0, "T: must be finite and >= 0");
  need(std::isfinite(c.T_slow) && c.T_slow >= 0.0, "T_slow: must be finite and >= 0");
  need(std::isfinite(c.dt) && c.dt > 0.0, "dt: must be positive");
  need(c.sample_every >= 1, "sample_every: must be >= 1");
  need(c.samples >= 1, "samples: must be >= 1");
  need(c.realizations >= 1, "realizations: must be >= 1");
  need(c.angle_every >= 0, "angle_every: must be >= 0");
  for (int m : c.angle_modes) need(m >= 1 && m <= c.K, "angle_modes: entries must lie in 1..K");
  need(c.sobolev_k >= 1.0, "sobolev_k: must be >= 1");
  for (int k : c.K_list) need(k >= 1 && 3 * k <= 4 * 4096, "K_list: entries must be positive");
  need(c.probe_modes >= 0, "probe_modes: must be >= 0");
  need(c.tolerances.percival > 0 && c.tolerances.conservation > 0 && c.tolerances.action_rtol > 0 &&
           c.tolerances.hill_rtol > 0,
       "tolerances: must be positive");
  need(c.averaging.panels >= 1 && c.averaging.nodes >= 1 && c.averaging.nodes <= 5,
       "averaging: panels >= 1 and nodes in 1..5");
  need(c.averaging.panel_growth >= 1.0, "averaging.panel_growth: must be >= 1");
  need(c.averaging.averaging.snapshots >= 0 && c.averaging.averaging.snapshots % 2 == 0,
       "averaging.snapshots: must be even and >= 0");
  need(c.averaging.averaging.T_avg > 0.0, "averaging.T_avg: must be positive");
  try {
    c.resonance.validate();
  } catch (const InvalidArgument& x) {
    e.push_back(std::string("resonance: ") + x.what());
  }
  if (c.perturbation.kind == PerturbationKind::external_force && c.perturbation.force.empty())
    e.push_back("perturbation.force: required for external_force");
  if (c.perturbation.kind == PerturbationKind::smoothing_map) {
    need(c.perturbation.kernel_decay > 0.0, "perturbation.kernel_decay: must be positive (analytic kernel)");
    need(c.perturbation.power >= 1 && c.perturbation.power <= 5, "perturbation.power: must be in 1..5");
  }
  if (c.noise) {
    try {
      c.noise->validate();
    } catch (const InvalidArgument& x) {
      e.push_back(std::string("noise: ") + x.what());
    }
  }
  if (c.measure) {
    try {
      c.measure->validate();
      for (int k : c.K_list)
        need(c.measure->law == "power" || c.measure->modes() >= k, "measure.sigma: explicit list shorter than K_list entry");
    } catch (const InvalidArgument& x) {
      e.push_back(std::string("measure: ") + x.what());
    }
  }
  if (c.initial.kind == "gaussian") need(c.measure.has_value(), "initial: kind 'gaussian' needs a measure");
  if (c.initial.kind == "file") need(!c.initial.path.empty(), "initial.path: required for kind 'file'");
  if (c.initial.kind == "modes") {
    for (const auto& [k, v] : c.initial.modes) {
      need(k != 0 && std::abs(k) <= c.K, "initial.modes: index " + std::to_string(k) + " outside +-1..+-K");
      need(std::isfinite(v), "initial.modes: values must be finite");
    }
  }
  switch (c.kind) {
    case ExperimentKind::ensemble:
      need(c.noise.has_value(), "noise: required for ensemble");
      need(c.epsilon > 0.0, "epsilon: must be positive for ensemble");
      break;
    case ExperimentKind::perturb:
      need(c.epsilon > 0.0, "epsilon: must be positive for perturb");
      need(c.n_max >= 1, "n_max: must be >= 1 for perturb");
      break;
    case ExperimentKind::measure:
      need(c.measure.has_value(), "measure: required for measure");
      break;
    case ExperimentKind::resonance:
      need(c.resonance.m <= c.K, "resonance.m: must not exceed K");
      break;
    case ExperimentKind::actions:
    case ExperimentKind::spectrum:
      need(c.n_max >= 1, "n_max: must be >= 1");
      break;
    default:
      break;
  }
  // Stability of the explicit nonlinear stage, with a factor 2 beyond the suggested step.
  if (e.empty() && c.initial.kind == "modes" && c.kind != ExperimentKind::scaling) {
    double sup = 0.0;
    for (const auto& [k, v] : c.initial.modes) sup += std::abs(v) * std::sqrt(2.0);
    const double limit = 2.0 * suggested_dt(c.K, sup);
    need(c.dt <= limit, "dt: exceeds the stability limit " + format_double(limit) + " for this K and amplitude");
  }
  return e;
}

FourierField initial_field(const ExperimentConfig& c) {
  if (c.initial.kind == "zero") return FourierField(c.K, c.N);
  if (c.initial.kind == "modes") {
    FourierField u(c.K, c.N);
    for (const auto& [k, v] : c.initial.modes) u = u.with_mode(k, u[k] + v);
    return u;
  }
  if (c.initial.kind == "file") {
    const auto u = field_from_json(Json::parse(read_text(c.initial.path)));
    return u.resized(c.K, c.N);
  }
  GaussianMeasureSpec m = *c.measure;
  if (m.law == "power") m = GaussianMeasureSpec::power_law(c.K, m.amplitude, m.exponent, m.zeta_prime, m.p);
  NoiseStream rng(split_seed(c.seed, 0));
  auto u = sample_gaussian(m, rng, c.N).resized(c.K, c.N);
  if (c.initial.h1_norm > 0.0) {
    const double n = sobolev_norm(u, 1.0);
    if (n > 0.0) u *= c.initial.h1_norm / n;
  }
  return u;
}

namespace {

struct Context {
  const ExperimentConfig& c;
  std::filesystem::path dir;
  RunResult& result;
  Json config;

  void csv(const std::string& name, const CsvTable& t) {
    write_text((dir / name).string(), t.to_string(&config));
    result.artifacts.push_back(name);
  }
  void json(const std::string& name, const Json& j) {
    write_text((dir / name).string(), j.dump(2) + "\n");
    result.artifacts.push_back(name);
  }
  void check(const std::string& name, bool ok, const std::string& detail) {
    result.checks.push_back({name, ok, detail});
  }
};

ActionOptions action_options(const ExperimentConfig& c) {
  ActionOptions a;
  a.rtol = c.tolerances.action_rtol;
  a.hill.rtol = a.hill.atol = c.tolerances.hill_rtol;
  return a;
}

HillOptions hill_options(const ExperimentConfig& c) {
  HillOptions h;
  h.rtol = h.atol = c.tolerances.hill_rtol;
  return h;
}

double max_relative_drift(const std::vector<double>& v) {
  double d = 0.0;
  for (double x : v) d = std::max(d, std::abs(x - v.front()));
  return v.empty() || v.front() == 0.0 ? d : d / std::abs(v.front());
}

void run_spectrum(Context& x) {
  const auto u = initial_field(x.c);
  const auto s = hill_spectrum(u, x.c.n_max, x.c.z, hill_options(x.c));
  x.csv("spectrum.csv", spectrum_table(s));
  x.result.summary = {{"spectrum", spectrum_to_json(s)}, {"field", field_to_json(u)}};
  bool ordered = true, interlaced = true;
  for (std::size_t i = 1; i < s.lambda.size(); ++i) ordered = ordered && s.lambda[i] >= s.lambda[i - 1];
  for (int n = 1; n <= s.n_max; ++n) {
    const double slack = s.options.interlace_tol * (1.0 + std::abs(s.mu[n - 1]));
    interlaced = interlaced && s.mu[n - 1] >= s.lo(n) - slack && s.mu[n - 1] <= s.hi(n) + slack;
  }
  x.check("ordering", ordered, "lambda_0 <= lambda_1 <= ...");
  x.check("interlacing", interlaced, "mu_n in [lambda_{2n-1}, lambda_{2n}]");
}

void run_actions(Context& x) {
  const auto u = initial_field(x.c);
  const auto I = actions(u, x.c.n_max, action_options(x.c));
  const double res = percival_residual(u, I);
  x.csv("actions.csv", actions_table(I));
  x.result.summary = {{"actions", actions_to_json(I)}, {"percival_residual", res}, {"field", field_to_json(u)}};
  x.check("percival", res < x.c.tolerances.percival,
          "residual " + format_double(res) + " vs tolerance " + format_double(x.c.tolerances.percival));
}

void run_evolve(Context& x) {
  const auto u = initial_field(x.c);
  EvolveOptions o;
  o.sample_every = x.c.sample_every;
  o.angle_modes = x.c.angle_modes;
  o.sobolev_p = {1.0};
  if (x.c.n_max > 0) o.extras.push_back(action_observable(x.c.n_max, action_options(x.c)));
  const auto rec = evolve(u, x.c.T, x.c.dt, x.c.perturbation, o);
  x.csv("evolve.csv", trajectory_table(rec));
  x.json("evolve_final.json", field_to_json(rec.final_state));
  x.result.summary = {{"samples", rec.size()}, {"aborted", rec.aborted}, {"abort_reason", rec.abort_reason}};
  if (rec.aborted) return;
  const double n0 = rec.norm0.front();
  if (!x.c.perturbation.active()) {
    const double d0 = max_relative_drift(rec.norm0), dH = max_relative_drift(rec.energy);
    x.check("norm0 conservation", d0 < x.c.tolerances.conservation, "max relative drift " + format_double(d0));
    x.check("energy conservation", dH < x.c.tolerances.conservation, "max relative drift " + format_double(dH));
    double dI = 0.0;
    for (int n = 0; n < x.c.n_max; ++n) {
      std::vector<double> col;
      for (const auto& row : rec.extras) col.push_back(row[n]);
      if (col.front() > 1e-12 * n0 * n0) dI = std::max(dI, max_relative_drift(col));
    }
    if (x.c.n_max > 0) x.check("action conservation", dI < 1e-4, "max relative drift " + format_double(dI));
  } else if (x.c.perturbation.kind == PerturbationKind::dissipative) {
    bool ok = true;
    for (std::size_t i = 0; i < rec.size(); ++i)
      ok = ok && rec.norm0[i] <= std::exp(-x.c.epsilon * rec.times[i]) * n0 * (1.0 + 1e-12);
    x.check("dissipative decay", ok, "||u(t)||_0 <= exp(-eps t) ||u(0)||_0 at every sample");
  }
}

std::vector<double> model_or_empirical(const ExperimentConfig& c, const FourierField* u, const std::vector<double>& I,
                                       int m) {
  if (c.frequencies == "empirical" && u) return frequency_vector_empirical(*u, m, 0.05, c.dt);
  ActionSpectrum a;
  a.n_max = I.size();
  a.I = I;
  return frequency_vector(a, m);
}

void run_perturb(Context& x) {
  const auto u = initial_field(x.c);
  auto opt = x.c.averaging;
  opt.averaging.action = action_options(x.c);
  opt.averaging.query = x.c.resonance;
  const auto curve = averaged_trajectory(u, x.c.epsilon, x.c.T_slow, x.c.perturbation, opt);
  x.csv("perturb_averaged.csv", averaged_table(curve));
  x.csv("perturb_actions.csv", averaged_comparison_table(curve));
  std::vector<ResonanceRow> rows;
  const int m = std::min(x.c.resonance.m, x.c.n_max);
  ResonanceQuery q = x.c.resonance;
  q.m = m;
  for (std::size_t i = 0; i < curve.J.size(); ++i)
    rows.push_back({curve.taus[i], resonance_indicator(model_or_empirical(x.c, nullptr, curve.J[i], m), q)});
  x.csv("perturb_resonance.csv", resonance_table(rows));
  x.result.summary = {{"sup_deviation", curve.sup_deviation},
                      {"error_band", curve.error_band},
                      {"resonant_nodes", curve.resonant_nodes},
                      {"aborted", curve.aborted},
                      {"abort_reason", curve.abort_reason},
                      {"frequencies", "model"}};
  if (curve.aborted) throw Error("averaged trajectory aborted: " + curve.abort_reason);
  x.check("averaged curve complete", true, format_double(curve.taus.size()) + " slow-time nodes");
}

void run_ensemble(Context& x) {
  const auto u = initial_field(x.c);
  EnsembleOptions o;
  o.realizations = x.c.realizations;
  o.T_slow = x.c.T_slow;
  o.dt = x.c.dt;
  o.samples = x.c.samples;
  o.n_actions = x.c.n_max;
  o.angle_modes = x.c.angle_modes;
  o.angle_every = x.c.angle_every;
  o.threads = x.c.threads;
  o.action = action_options(x.c);
  NoiseSpec spec = *x.c.noise;
  spec.seed = x.c.seed;
  const auto r = ensemble(u, x.c.epsilon, spec, o);
  x.csv("ensemble.csv", ensemble_table(r));
  Json summary = ensemble_summary(r);
  Json tv = Json::array();
  const auto w = uniform_weight(r);
  for (int n : r.angle_modes) {
    const auto a = angle_equidistribution(r, n, w);
    tv.push_back({{"mode", n}, {"tv", a.tv}, {"noise_floor", a.noise_floor}, {"excluded_mass", a.excluded_mass}});
  }
  summary["angle_tv"] = tv;
  const bool proxy = x.c.n_max < x.c.resonance.m;
  summary["occupation"] = {{"delta", x.c.resonance.delta},
                           {"m", x.c.resonance.m},
                           {"K", x.c.resonance.K},
                           {"from_proxies", proxy},
                           {"fraction", occupation_fraction(r, x.c.resonance, proxy)}};
  x.result.summary = summary;
  x.check("completion", r.valid,
          std::to_string(r.completed) + " of " + std::to_string(r.runs.size()) + " realizations completed");
}

void run_resonance(Context& x) {
  const auto u = initial_field(x.c);
  const int m = x.c.resonance.m;
  EvolveOptions o;
  o.sample_every = x.c.sample_every;
  o.extras.push_back(action_observable(std::max(m, x.c.n_max), action_options(x.c)));
  if (x.c.frequencies == "empirical") o.snapshot_every = 1;
  const auto rec = evolve(u, x.c.T, x.c.dt, x.c.perturbation, o);
  std::vector<ResonanceRow> rows;
  bool orders_agree = true;
  std::vector<std::vector<double>> acts;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const std::vector<double> I(rec.extras[i].begin(), rec.extras[i].begin() + m);
    const FourierField* snap = i < rec.snapshots.size() ? &rec.snapshots[i] : nullptr;
    const auto W = model_or_empirical(x.c, snap, I, m);
    const auto a = resonance_indicator(W, x.c.resonance, LatticeOrder::lexicographic);
    const auto b = resonance_indicator(W, x.c.resonance, LatticeOrder::by_shell);
    orders_agree = orders_agree && a.resonant == b.resonant && a.value == b.value;
    rows.push_back({x.c.epsilon * rec.times[i], a});
    acts.push_back(I);
  }
  x.csv("resonance.csv", resonance_table(rows));
  double occ = 0.0;
  if (rec.size() > 1) {
    double total = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double h = rec.times[i] - rec.times[i - 1];
      occ += 0.5 * h * (rows[i].hit.resonant + rows[i - 1].hit.resonant);
      total += h;
    }
    occ /= total;
  } else if (!rows.empty()) {
    occ = rows[0].hit.resonant;
  }
  x.result.summary = {{"occupation", occ}, {"samples", rows.size()}, {"frequencies", x.c.frequencies},
                      {"aborted", rec.aborted}, {"abort_reason", rec.abort_reason}};
  if (rec.aborted) throw BlowUpError(rec.abort_reason, rec.times.empty() ? 0.0 : rec.times.back());
  x.check("enumeration orders agree", orders_agree, "lexicographic and by-shell minima coincide at every sample");
}

void run_scaling(Context& x) {
  const auto u = initial_field(x.c);
  ScalingOptions o;
  o.modes = x.c.K;
  o.grid_size = x.c.N;
  o.dt = x.c.raw.contains("dt") ? x.c.dt : 0.0;
  o.sample_every = x.c.sample_every;
  const auto rows = scaling_experiment(u, x.c.lambdas, x.c.sobolev_k, x.c.T, o);
  CsvTable t{{"lambda", "certified", "inf_norm", "sup_norm", "lower_bound", "lower_bound_holds"}, {}};
  Json notes = Json::array();
  bool holds = true;
  int certified = 0;
  for (const auto& r : rows) {
    t.add({r.lambda, double(r.certified), r.inf_norm, r.sup_norm, r.lower_bound, double(r.lower_bound_holds)});
    notes.push_back({{"lambda", r.lambda}, {"note", r.note}});
    if (r.certified) {
      ++certified;
      holds = holds && r.lower_bound_holds;
    }
  }
  x.csv("scaling.csv", t);
  x.result.summary = {{"certified", certified}, {"notes", notes}};
  x.check("lower bound", holds, "||u(t)||_k >= lambda ||u0||_0 on every certified run");
}

void run_measure(Context& x) {
  const auto& m = *x.c.measure;
  std::vector<int> Ks = x.c.K_list.empty() ? std::vector<int>{x.c.K} : x.c.K_list;
  CsvTable t{{"sample", "K", "divergence"}, {}};
  Json perK = Json::array();
  bool finite = true;
  std::vector<double> worst(Ks.size(), 0.0);
  for (int i = 0; i < x.c.samples; ++i) {
    for (std::size_t q = 0; q < Ks.size(); ++q) {
      const int K = Ks[q];
      GaussianMeasureSpec s = m;
      if (m.law == "power") s = GaussianMeasureSpec::power_law(K, m.amplitude, m.exponent, m.zeta_prime, m.p);
      else s.sigma.resize(K);
      NoiseStream rng(split_seed(x.c.seed, static_cast<std::uint64_t>(i) + 1));
      const auto u = sample_gaussian(s, rng, 4 * K);
      PerturbationSpec p = x.c.perturbation;
      if (!p.force.empty()) p.force = p.force.resized(K, 4 * K);
      const auto d = divergence_estimate(p, u, x.c.probe_modes);
      finite = finite && d.finite;
      worst[q] = std::max(worst[q], std::abs(d.divergence));
      t.add({double(i), double(K), d.divergence});
    }
  }
  for (std::size_t q = 0; q < Ks.size(); ++q) perK.push_back({{"K", Ks[q]}, {"max_abs_divergence", worst[q]}});
  x.csv("measure.csv", t);
  x.result.summary = {{"perturbation", to_string(x.c.perturbation.kind)},
                      {"admissibility_ratio", m.admissibility_ratio()},
                      {"tail", m.tail()},
                      {"per_K", perK},
                      {"reduction", "bounded divergence of the Galerkin truncation"}};
  x.check("finite divergence", finite, "every probe finite");
  if (x.c.perturbation.kind == PerturbationKind::external_force || x.c.perturbation.kind == PerturbationKind::none) {
    bool zero = true;
    for (double w : worst) zero = zero && w == 0.0;
    x.check("zero divergence", zero, "state-independent channel");
  }
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& c, const std::string& out_dir) {
  RunResult result;
  std::filesystem::create_directories(out_dir);
  Context x{c, out_dir, result, c.raw};
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (c.kind) {
      case ExperimentKind::spectrum: run_spectrum(x); break;
      case ExperimentKind::actions: run_actions(x); break;
      case ExperimentKind::evolve: run_evolve(x); break;
      case ExperimentKind::perturb: run_perturb(x); break;
      case ExperimentKind::ensemble: run_ensemble(x); break;
      case ExperimentKind::resonance: run_resonance(x); break;
      case ExperimentKind::scaling: run_scaling(x); break;
      case ExperimentKind::measure: run_measure(x); break;
    }
    result.status = 0;
    for (const auto& ch : result.checks)
      if (!ch.passed) result.status = 1;
    if (c.kind == ExperimentKind::evolve && result.summary.value("aborted", false)) {
      result.status = 3;
      result.errors.push_back(result.summary.value("abort_reason", std::string()));
    }
  } catch (const InvalidArgument& e) {
    result.status = 2;
    result.errors.push_back(e.what());
  } catch (const std::exception& e) {
    result.status = 3;
    result.errors.push_back(e.what());
  }
  if (result.status == 3) {
    write_text((x.dir / "ABORTED").string(), result.errors.empty() ? "aborted\n" : result.errors.front() + "\n");
    result.artifacts.push_back("ABORTED");
  }
  Json checks = Json::array();
  for (const auto& ch : result.checks) checks.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
  const std::string name = to_string(c.kind) + ".json";
  result.artifacts.push_back(name);
  write_text((x.dir / name).string(), Json{{"config", c.raw},
                                           {"status", result.status},
                                           {"checks", checks},
                                           {"errors", result.errors},
                                           {"results", result.summary}}
                                              .dump(2) + "\n");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text((x.dir / "run_info.json").string(),
             Json{{"started", started}, {"finished", utc_now()}, {"wall_seconds", wall}}.dump(2) + "\n");
  result.artifacts.push_back("run_info.json");
  return result;
}

}  // namespace kdvlab
