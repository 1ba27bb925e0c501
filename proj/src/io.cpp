#include "kdvlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "kdvlab/error.hpp"

namespace kdvlab {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  return x;
}

namespace {

// JSON has no NaN or infinity; those travel as strings.
Json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

double to_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw InvalidArgument("expected a number, got " + j.dump());
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> to_doubles(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("expected an array, got " + j.dump());
  std::vector<double> v;
  for (const auto& x : j) v.push_back(to_double(x));
  return v;
}

const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace

Json field_to_json(const FourierField& u) {
  Json modes = Json::array();
  for (int k = 1; k <= u.modes(); ++k) modes.push_back(Json::array({k, u.cos_coeff(k), u.sin_coeff(k)}));
  return Json{{"K", u.modes()}, {"N", u.grid_size()}, {"modes", modes}};
}

FourierField field_from_json(const Json& j) {
  const int K = member(j, "K").get<int>();
  const int N = member(j, "N").get<int>();
  if (K < 1) throw InvalidArgument("field: K must be positive");
  std::vector<double> c(K, 0.0), s(K, 0.0);
  for (const auto& t : member(j, "modes")) {
    if (!t.is_array() || t.size() != 3) throw InvalidArgument("field: modes entries are [k, u_k, u_-k]");
    const int k = t[0].get<int>();
    if (k < 1 || k > K) throw InvalidArgument("field: mode index " + std::to_string(k) + " outside 1..K");
    c[k - 1] = to_double(t[1]);
    s[k - 1] = to_double(t[2]);
  }
  return FourierField(std::move(c), std::move(s), N);
}

Json spectrum_to_json(const HillSpectrum& s) {
  const auto& o = s.options;
  return Json{{"n_max", s.n_max},
              {"z", s.z},
              {"shift", s.shift},
              {"lambda", numbers(s.lambda)},
              {"mu", numbers(s.mu)},
              {"gaps", numbers(s.gaps)},
              {"critical", numbers(s.critical)},
              {"tolerances",
               {{"rtol", o.rtol},
                {"atol", o.atol},
                {"closed_gap_tol", o.closed_gap_tol},
                {"interlace_tol", o.interlace_tol},
                {"fixed_steps", o.fixed_steps}}}};
}

HillSpectrum spectrum_from_json(const Json& j) {
  HillSpectrum s;
  s.n_max = member(j, "n_max").get<int>();
  s.z = to_double(member(j, "z"));
  if (j.contains("shift")) s.shift = to_double(j.at("shift"));
  s.lambda = to_doubles(member(j, "lambda"));
  s.gaps = to_doubles(member(j, "gaps"));
  if (j.contains("mu")) s.mu = to_doubles(j.at("mu"));
  if (j.contains("critical")) s.critical = to_doubles(j.at("critical"));
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    s.options.rtol = to_double(member(t, "rtol"));
    s.options.atol = to_double(member(t, "atol"));
    s.options.closed_gap_tol = to_double(member(t, "closed_gap_tol"));
    s.options.interlace_tol = to_double(member(t, "interlace_tol"));
    s.options.fixed_steps = member(t, "fixed_steps").get<int>();
  }
  if (static_cast<int>(s.lambda.size()) != 2 * s.n_max + 1 || static_cast<int>(s.gaps.size()) != s.n_max)
    throw InvalidArgument("spectrum: array sizes do not match n_max");
  return s;
}

Json actions_to_json(const ActionSpectrum& I) {
  return Json{{"n_max", I.n_max}, {"I", numbers(I.I)}, {"tail", number(I.truncation_estimate)},
              {"gaps", numbers(I.gaps)}};
}

ActionSpectrum actions_from_json(const Json& j) {
  ActionSpectrum I;
  I.n_max = member(j, "n_max").get<int>();
  I.I = to_doubles(member(j, "I"));
  I.truncation_estimate = to_double(member(j, "tail"));
  if (j.contains("gaps")) I.gaps = to_doubles(j.at("gaps"));
  if (static_cast<int>(I.I.size()) != I.n_max) throw InvalidArgument("actions: size of I does not match n_max");
  return I;
}

void CsvTable::add(const std::vector<double>& row) {
  std::vector<std::string> cells;
  cells.reserve(row.size());
  for (double x : row) cells.push_back(format_double(x));
  add_cells(std::move(cells));
}

void CsvTable::add_cells(std::vector<std::string> row) {
  if (row.size() != header.size())
    throw InvalidArgument("csv: row has " + std::to_string(row.size()) + " cells, header has " +
                          std::to_string(header.size()));
  rows.push_back(std::move(row));
}

std::string CsvTable::to_string(const Json* config) const {
  std::string out;
  if (config) out += "# config: " + config->dump() + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto pos = line.find(',', start);
      cells.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      t.add_cells(std::move(cells));
    }
  }
  return t;
}

CsvTable spectrum_table(const HillSpectrum& s) {
  CsvTable t{{"n", "lambda_lo", "lambda_hi", "gap", "mu"}, {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  t.add({0.0, nan, s.lambda.at(0), nan, nan});
  for (int n = 1; n <= s.n_max; ++n)
    t.add({double(n), s.lo(n), s.hi(n), s.gaps[n - 1], s.mu.empty() ? nan : s.mu[n - 1]});
  return t;
}

CsvTable actions_table(const ActionSpectrum& I) {
  CsvTable t{{"n", "I_n", "gap_n"}, {}};
  for (int n = 1; n <= I.n_max; ++n)
    t.add({double(n), I.I[n - 1], I.gaps.empty() ? std::numeric_limits<double>::quiet_NaN() : I.gaps[n - 1]});
  return t;
}

CsvTable trajectory_table(const TrajectoryRecord& r) {
  CsvTable t{{"t", "tau", "norm0"}, {}};
  for (double p : r.sobolev_p) t.header.push_back("norm" + format_double(p));
  t.header.push_back("H");
  for (const auto& c : r.extra_columns) t.header.push_back(c);
  for (int n : r.angle_modes) t.header.push_back("angle_" + std::to_string(n));
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::vector<double> row{r.times[i], r.epsilon * r.times[i], r.norm0[i]};
    for (const auto& np : r.norm_p) row.push_back(np[i]);
    row.push_back(r.energy[i]);
    if (!r.extra_columns.empty()) row.insert(row.end(), r.extras[i].begin(), r.extras[i].end());
    for (const auto& a : r.angles) row.push_back(a[i]);
    t.add(row);
  }
  return t;
}

CsvTable ensemble_table(const EnsembleResult& r) {
  CsvTable t{{"tau", "realization"}, {}};
  const int na = r.action_stats.size();
  const int np = r.proxy_stats.size();
  for (int n = 1; n <= na; ++n) t.header.push_back("I_" + std::to_string(n));
  for (int n = 1; n <= np; ++n) t.header.push_back("proxy_I_" + std::to_string(n));
  for (int m : r.angle_modes) t.header.push_back("angle_" + std::to_string(m));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t q = 0; q < r.runs.size(); ++q) {
    const auto& d = r.runs[q];
    for (std::size_t i = 0; i < r.taus.size(); ++i) {
      std::vector<double> row{r.taus[i], double(q)};
      for (int n = 0; n < na; ++n) row.push_back(i < d.actions.size() ? d.actions[i][n] : nan);
      for (int n = 0; n < np; ++n) row.push_back(i < d.proxy.size() ? d.proxy[i][n] : nan);
      for (std::size_t m = 0; m < r.angle_modes.size(); ++m) row.push_back(i < d.angles.size() ? d.angles[i][m] : nan);
      t.add(row);
    }
  }
  return t;
}

CsvTable averaged_table(const AveragedCurve& c) {
  CsvTable t{{"tau"}, {}};
  const int n = c.J.empty() ? 0 : c.J.front().size();
  for (int j = 1; j <= n; ++j) t.header.push_back("J_" + std::to_string(j));
  for (int j = 1; j <= n; ++j) t.header.push_back("err_" + std::to_string(j));
  for (std::size_t i = 0; i < c.J.size(); ++i) {
    std::vector<double> row{c.taus[i]};
    row.insert(row.end(), c.J[i].begin(), c.J[i].end());
    row.insert(row.end(), c.err[i].begin(), c.err[i].end());
    t.add(row);
  }
  return t;
}

CsvTable averaged_comparison_table(const AveragedCurve& c) {
  CsvTable t{{"tau"}, {}};
  const int n = c.I.empty() ? 0 : c.I.front().size();
  for (int j = 1; j <= n; ++j) t.header.push_back("I_" + std::to_string(j));
  t.header.push_back("deviation");
  for (std::size_t i = 0; i < c.I.size(); ++i) {
    std::vector<double> row{c.taus[i]};
    row.insert(row.end(), c.I[i].begin(), c.I[i].end());
    row.push_back(c.deviation[i]);
    t.add(row);
  }
  return t;
}

CsvTable resonance_table(const std::vector<ResonanceRow>& rows) {
  CsvTable t{{"tau", "in_resonance", "min_k", "min_value"}, {}};
  for (const auto& r : rows) {
    std::string k;
    for (std::size_t i = 0; i < r.hit.k.size(); ++i) {
      if (i) k += ':';
      k += std::to_string(r.hit.k[i]);
    }
    t.add_cells({format_double(r.tau), r.hit.resonant ? "1" : "0", k, format_double(r.hit.value)});
  }
  return t;
}

Json ensemble_summary(const EnsembleResult& r) {
  Json seeds = Json::array(), aborted = Json::array();
  for (std::size_t q = 0; q < r.runs.size(); ++q) {
    seeds.push_back(r.runs[q].seed);
    if (r.runs[q].aborted) aborted.push_back({{"realization", q}, {"reason", r.runs[q].abort_reason}});
  }
  auto stats = [&](const std::vector<QuantityStats>& v) {
    Json a = Json::array();
    for (const auto& s : v) {
      Json q = Json::array();
      for (const auto& level : s.quantiles) q.push_back(numbers(level));
      a.push_back({{"mean", numbers(s.mean)}, {"variance", numbers(s.variance)}, {"quantiles", q}, {"count", s.count}});
    }
    return a;
  };
  return Json{{"epsilon", r.epsilon},
              {"realizations", r.runs.size()},
              {"completed", r.completed},
              {"valid", r.valid},
              {"neglected_forcing", r.neglected_forcing},
              {"taus", numbers(r.taus)},
              {"quantile_levels", numbers(r.quantile_levels)},
              {"seeds", seeds},
              {"aborted", aborted},
              {"actions", stats(r.action_stats)},
              {"proxies", stats(r.proxy_stats)}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace kdvlab
