#include "condlim/harness.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "condlim/cohomology.hpp"
#include "condlim/error.hpp"
#include "condlim/harmonic.hpp"
#include "condlim/llt.hpp"
#include "condlim/model_io.hpp"
#include "condlim/past_measure.hpp"
#include "condlim/rng.hpp"

namespace condlim {

using ojson = nlohmann::ordered_json;

namespace {

const char* const kKinds[] = {"normalize", "variance", "spectrum", "survive", "duality", "harmonic",
                              "mu",        "cclt",     "cllt",     "llt",     "exit_tail"};

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not a number: \"" + s + "\"");
  }
  if (pos != s.size()) throw ConfigError("not a number: \"" + s + "\"");
  return v;
}

int to_int(const std::string& s) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not an integer: \"" + s + "\"");
  }
  if (pos != s.size()) throw ConfigError("not an integer: \"" + s + "\"");
  return static_cast<int>(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

Word parse_word(const std::string& s) {
  Word w;
  for (char c : s) {
    if (c < '0' || c > '9') throw ConfigError("anchor must be a string of digits");
    w.symbols.push_back(c - '0');
  }
  return w;
}

std::string word_string(const Word& w) {
  std::string s;
  for (int x : w.symbols) s.push_back(static_cast<char>('0' + x));
  return s;
}

Anchor make_anchor(const ExperimentConfig& c) {
  if (c.anchor.empty()) return StationaryAnchor{};
  return parse_word(c.anchor);
}

Method method_of(const ExperimentConfig& c) { return parse_method(c.method); }

void need_n(const ExperimentConfig& c, std::size_t at_least) {
  if (c.n.size() < at_least)
    throw ConfigError("experiment \"" + c.experiment + "\" needs at least " + std::to_string(at_least) + " value(s) of n");
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
  if (s.empty()) throw ConfigError("empty n specification");
  std::vector<int> out;
  if (s.find("..") != std::string::npos) {
    auto p = s.find("..");
    int lo = to_int(s.substr(0, p)), hi = to_int(s.substr(p + 2));
    if (hi < lo) throw ConfigError("empty range " + s);
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  if (s.find(':') != std::string::npos) {
    auto parts = split(s, ':');
    if (parts.size() != 3) throw ConfigError("expected lo:hi:step or lo:hi:xK, got " + s);
    int lo = to_int(parts[0]), hi = to_int(parts[1]);
    if (!parts[2].empty() && parts[2][0] == 'x') {
      int f = to_int(parts[2].substr(1));
      if (f < 2 || lo < 1) throw ConfigError("geometric ladder needs lo >= 1 and factor >= 2");
      for (long n = lo; n <= hi; n *= f) out.push_back(static_cast<int>(n));
    } else {
      int st = to_int(parts[2]);
      if (st < 1) throw ConfigError("step must be positive");
      for (int n = lo; n <= hi; n += st) out.push_back(n);
    }
    if (out.empty()) throw ConfigError("empty ladder " + s);
    return out;
  }
  for (const auto& p : split(s, ',')) out.push_back(to_int(p));
  return out;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    auto parts = split(s, ':');
    if (parts.size() != 3) throw ConfigError("expected lo:hi:step, got " + s);
    double lo = to_double(parts[0]), hi = to_double(parts[1]), st = to_double(parts[2]);
    if (!(st > 0) || hi < lo) throw ConfigError("bad grid " + s);
    auto steps = static_cast<long>(std::floor((hi - lo) / st + 1e-9));
    for (long i = 0; i <= steps; ++i) out.push_back(lo + st * static_cast<double>(i));
    return out;
  }
  for (const auto& p : split(s, ',')) out.push_back(to_double(p));
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON at " + position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "experiment") c.experiment = v.get<std::string>();
      else if (k == "model") c.model = v.get<std::string>();
      else if (k == "observable") c.observable = v.get<std::string>();
      else if (k == "method") c.method = v.get<std::string>();
      else if (k == "n" || k == "n_ladder")
        c.n = v.is_string()  ? parse_int_list(v.get<std::string>())
              : v.is_array() ? v.get<std::vector<int>>()
                             : std::vector<int>{v.get<int>()};
      else if (k == "t") c.t = v.get<double>();
      else if (k == "t_grid") c.t_grid = v.is_string() ? parse_grid(v.get<std::string>()) : v.get<std::vector<double>>();
      else if (k == "interval" || k == "window") {
        auto p = v.get<std::vector<double>>();
        if (p.size() != 2) throw ConfigError("\"" + k + "\" needs two numbers");
        (k == "interval" ? c.a : c.ap) = p[0];
        (k == "interval" ? c.b : c.bp) = p[1];
      } else if (k == "anchor") c.anchor = v.get<std::string>();
      else if (k == "samples") c.samples = v.get<std::int64_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "workers") c.workers = v.get<int>();
      else if (k == "cap") c.cap = v.get<int>();
      else if (k == "depth") c.depth = v.get<int>();
      else if (k == "word_length") c.word_length = v.get<int>();
      else if (k == "tol") c.tol = v.get<double>();
      else if (k == "epsilon") c.epsilon = v.get<double>();
      else if (k == "grid_h") c.grid_h = v.get<double>();
      else if (k == "test_functions") c.test_functions = v.get<int>();
      else if (k == "budget_states") c.budget_states = v.get<std::uint64_t>();
      else if (k == "output") c.output = v.get<std::string>();
      else throw ConfigError("unknown config key \"" + k + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  validate(c);
  return c;
}

void validate(const ExperimentConfig& c) {
  bool known = false;
  for (const char* k : kKinds) known = known || c.experiment == k;
  if (!known) throw ConfigError("unknown experiment \"" + c.experiment + "\"");
  if (c.model.empty()) throw ConfigError("no model path given");
  parse_method(c.method);
  for (int n : c.n)
    if (n < 1) throw ConfigError("n must be >= 1");
  if (c.samples < 1) throw ConfigError("samples must be >= 1");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (!(c.b > c.a)) throw ConfigError("interval must satisfy a < b");
  if (!(c.bp > c.ap)) throw ConfigError("window must satisfy a' < b'");
  if (!(c.epsilon > 0 && c.epsilon < 0.25)) throw ConfigError("epsilon must lie in (0, 1/4)");
  if (c.grid_h < 0) throw ConfigError("grid_h must be >= 0");
  if (c.depth < 0) throw ConfigError("depth must be >= 0");
  if (c.word_length < 0) throw ConfigError("word_length must be >= 0");
  if (c.test_functions < 1) throw ConfigError("test_functions must be >= 1");
  if (!c.anchor.empty()) parse_word(c.anchor);
}

ojson config_to_json(const ExperimentConfig& c) {
  ojson j;
  j["experiment"] = c.experiment;
  j["model"] = c.model;
  j["observable"] = c.observable;
  j["method"] = c.method;
  j["n"] = c.n;
  j["t"] = c.t;
  j["t_grid"] = c.t_grid;
  j["interval"] = {c.a, c.b};
  j["window"] = {c.ap, c.bp};
  j["anchor"] = c.anchor;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["cap"] = c.cap;
  j["depth"] = c.depth;
  j["word_length"] = c.word_length;
  j["tol"] = c.tol;
  j["epsilon"] = c.epsilon;
  j["grid_h"] = c.grid_h;
  j["test_functions"] = c.test_functions;
  j["budget_states"] = c.budget_states;
  j["output"] = c.output;
  return j;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string git_blob_sha1(const std::string& content) {
  std::string data = "blob " + std::to_string(content.size());
  data.push_back('\0');
  data += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw ConfigError("SHA-1 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string RunReport::csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

ojson RunReport::to_json() const {
  ojson j;
  j["config"] = config;
  j["model_hash"] = model_hash;
  // Bumped whenever the columns of an experiment change.
  j["csv_schema"] = config.value("experiment", std::string()) + "/1";
  j["columns"] = columns;
  j["wall_seconds"] = wall_seconds;
  j["summary"] = summary;
  j["warnings"] = warnings;
  j["rows"] = rows.size();
  return j;
}

namespace {

using Row = std::vector<std::string>;
std::string num(double x) { return format_number(x); }

void run_normalize(const ExperimentConfig& c, const ModelFile& mf, RunReport& rep) {
  NormalizeOptions no;
  no.tol = c.tol;
  no.depth = c.depth;
  GibbsModel m = gibbs_model(mf, no);
  rep.summary["lambda"] = m.lambda;
  rep.summary["normalization_error"] = m.normalization_error;
  rep.summary["iterations"] = m.iterations;
  rep.summary["nu_depth"] = m.depth;
  rep.columns = {"table", "window", "value"};
  auto dump = [&](const char* name, const RealFunction& f) {
    ojson t;
    std::vector<int> buf(static_cast<std::size_t>(f.window_length()));
    for (std::size_t i : f.space().admissible()) {
      f.space().decode(i, buf.data());
      std::string key = window_key(buf.data(), f.past_depth(), f.future_depth());
      t[key] = f.at(i);
      rep.rows.push_back({name, key, num(f.at(i))});
    }
    rep.summary[name] = t;
  };
  dump("psi", m.psi);
  dump("h", m.h);
  RealFunction nu(m.spec, 0, m.depth, m.nu_plus);
  dump("nu_plus", nu);
}

void run_variance(const ExperimentConfig&, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  MartingaleOptions mo;
  mo.throw_on_coboundary = false;
  MartingaleData md = martingale_part(m, f, mo);
  GreenKubo gk = green_kubo_variance(m, f);
  rep.summary["sigma2"] = md.sigma2;
  rep.summary["sigma2_green_kubo"] = gk.sigma2;
  if (!md.is_coboundary) rep.summary["sigma2_lambda_fit"] = variance_from_lambda(m, f).sigma2;
  rep.summary["is_coboundary"] = md.is_coboundary;
  rep.summary["h_sup_norm"] = md.h.sup_norm();
  rep.summary["neumann_terms"] = md.neumann_terms;
  rep.summary["bound_constant"] = md.bound_constant();
  rep.columns = {"quantity", "value"};
  rep.rows.push_back({"sigma2", num(md.sigma2)});
  rep.rows.push_back({"sigma2_green_kubo", num(gk.sigma2)});
}

void run_spectrum(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  if (c.t_grid.empty()) throw ConfigError("spectrum needs t_grid");
  rep.columns = {"t", "re_lambda", "im_lambda", "abs_lambda", "residual_radius"};
  for (double t : c.t_grid) {
    SpectralData sd = perturbed_spectrum(m, f, t);
    rep.rows.push_back({num(t), num(sd.lambda.real()), num(sd.lambda.imag()), num(std::abs(sd.lambda)),
                        num(sd.residual_radius)});
  }
}

void run_survive(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  need_n(c, 1);
  WalkChain chain(m, f, make_anchor(c));
  SeriesOptions so;
  so.method = method_of(c);
  so.grid_h = c.grid_h;
  so.mc.samples = c.samples;
  so.mc.seed = c.seed;
  so.mc.workers = c.workers;
  SurvivalSeries s = survival_series(chain, c.t, c.n, so);
  MartingaleOptions mo;
  mo.throw_on_coboundary = false;
  double sigma = std::sqrt(martingale_part(m, f, mo).sigma2);
  rep.columns = {"n", "method", "estimate", "stderr", "scaled"};
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    double est = s.survival[i].estimate;
    double scaled = sigma * std::sqrt(2.0 * std::numbers::pi * s.n[i]) * est / 2.0;
    rep.rows.push_back({std::to_string(s.n[i]), s.method, num(est), num(s.survival[i].std_error), num(scaled)});
  }
  rep.summary["method"] = s.method;
  if (!s.note.empty()) rep.warnings.push_back(s.note);
}

void run_duality(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  need_n(c, 1);
  const int k = m.spec.alphabet_size();
  std::vector<DualityTerm> F;
  for (int i = 0; i < c.test_functions; ++i) {
    PhiloxStream rng(c.seed, 3u, static_cast<std::uint64_t>(i));
    DualityTerm term;
    term.coef = 2.0 * rng.uniform() - 1.0;
    for (Word* w : {&term.A, &term.B}) {
      int len = 1 + static_cast<int>(rng.uniform() * 2);
      for (int p = 0; p < len; ++p) w->symbols.push_back(static_cast<int>(rng.uniform() * k));
    }
    double lo = -1.0 + 2.0 * rng.uniform(), hi = lo + 0.1 + 2.0 * rng.uniform();
    term.I = {lo, hi};
    lo = -1.0 + 2.0 * rng.uniform();
    term.J = {lo, lo + 0.1 + 2.0 * rng.uniform()};
    F.push_back(term);
  }
  rep.columns = {"n", "lhs", "rhs", "abs_diff"};
  double worst = 0.0;
  for (int n : c.n) {
    DualityResult d = duality_check(m, f, F, n);
    worst = std::max(worst, d.abs_diff);
    rep.rows.push_back({std::to_string(n), num(d.lhs), num(d.rhs), num(d.abs_diff)});
    rep.summary["lhs"] = d.lhs;
    rep.summary["rhs"] = d.rhs;
  }
  rep.summary["abs_diff"] = worst;
}

void run_harmonic(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  if (c.t_grid.empty()) throw ConfigError("harmonic needs t_grid");
  Anchor anchor = make_anchor(c);
  HarmonicFunction hf;
  if (c.method == "mc") {
    hf = harmonic_on_grid_mc(m, f, anchor, c.t_grid, c.samples, c.cap, c.seed, c.workers);
  } else {
    need_n(c, 1);
    SeriesOptions so;
    so.method = method_of(c);
    so.grid_h = c.grid_h;
    so.mc.samples = c.samples;
    so.mc.seed = c.seed;
    so.mc.workers = c.workers;
    hf = harmonic_on_grid(m, f, anchor, c.t_grid, c.n.back(), so);
  }
  rep.columns = {"t", "V", "err", "method"};
  for (std::size_t i = 0; i < hf.t.size(); ++i)
    rep.rows.push_back({num(hf.t[i]), num(hf.values[i]), num(hf.errors[i]), hf.method});
  MartingaleOptions mo;
  mo.throw_on_coboundary = false;
  rep.summary["bound_constant"] = martingale_part(m, f, mo).bound_constant();
  rep.summary["method"] = hf.method;
}

void run_mu(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  need_n(c, 1);
  if (c.anchor.empty()) throw ConfigError("mu needs an anchor word");
  PastMeasure pm = make_past_measure(m, parse_word(c.anchor));
  const int N = c.n.back();
  if (c.word_length > N) throw ConfigError("word_length must not exceed n");
  SeriesOptions so;
  so.method = method_of(c);
  so.grid_h = c.grid_h;
  DepthOracle V = [&](const Word& z, double t, int depth) {
    WalkChain chain(m, f, z);
    return harmonic_finite_n(chain, t, N - depth, so).value;
  };
  rep.columns = {"word", "mass"};
  CompensatedSum<double> total;
  for (const Word& a : enumerate_words(m.spec, c.word_length)) {
    double mass = mu_minus_cylinder_mass(pm, f, c.t, a, V);
    total.add(mass);
    rep.rows.push_back({word_string(a), num(mass)});
  }
  rep.summary["total_mass"] = total.value();
}

void run_cclt(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  need_n(c, 1);
  CltResult r = conditioned_clt_experiment(m, f, c.a, c.b, c.n.back(), c.samples, c.seed, c.workers);
  rep.columns = {"bin_lo", "density", "rayleigh_density"};
  for (std::size_t i = 0; i < r.bin_lo.size(); ++i)
    rep.rows.push_back({num(r.bin_lo[i]), num(r.bin_density[i]), num(r.rayleigh_density[i])});
  rep.summary["ks"] = r.ks;
  rep.summary["survivors"] = r.survivors;
  rep.summary["samples"] = r.samples;
  rep.summary["mean"] = r.mean;
  rep.summary["mean_se"] = r.mean_se;
  rep.summary["rayleigh_mean"] = std::sqrt(std::numbers::pi / 2.0);
}

void run_cllt(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  need_n(c, 2);
  CllOptions o;
  o.method = method_of(c);
  o.grid_h = c.grid_h;
  CllResult r = conditioned_llt_experiment(m, f, c.a, c.b, c.ap, c.bp, c.n, o);
  rep.columns = {"n", "p", "error", "tau_eq_n", "scaled"};
  for (const auto& row : r.rows)
    rep.rows.push_back({std::to_string(row.n), num(row.p), num(row.error), num(row.tau_eq_n),
                        num(row.p * std::pow(row.n, 1.5))});
  rep.summary["slope"] = r.slope;
  rep.summary["slope_se"] = r.slope_se;
  rep.summary["prefactor_ratio"] = r.prefactor_ratio;
  rep.summary["v_integral"] = r.v_integral;
  rep.summary["v_check_integral"] = r.v_check_integral;
  rep.summary["v_integral_raw"] = r.v_integral_raw;
  rep.summary["v_check_integral_raw"] = r.v_check_integral_raw;
  rep.summary["sigma2"] = r.sigma2;
  rep.summary["probe_max"] = r.probe_max;
  rep.summary["method"] = r.method;
}

void run_llt(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  need_n(c, 5);
  BandLimitedTarget F = make_target(RealFunction::constant(m.spec, 1.0), c.ap, c.bp, c.epsilon);
  Word z;
  if (c.anchor.empty()) {
    // First admissible word long enough for every window.
    int D = std::max(m.psi.future_depth(), f.future_depth());
    z = enumerate_words(m.spec, D).front();
  } else {
    z = parse_word(c.anchor);
  }
  LltFit r = remainder_decay_fit(m, f, F, c.n, z);
  rep.columns = {"n", "lhs", "main", "remainder"};
  for (const auto& p : r.points) rep.rows.push_back({std::to_string(p.n), num(p.lhs), num(p.main), num(p.remainder)});
  rep.summary["slope"] = r.fit.slope;
  rep.summary["r2"] = r.fit.r2;
  rep.summary["slope_se"] = r.fit.slope_se;
  rep.summary["low_signal"] = r.low_signal;
  rep.summary["probe_max"] = r.probe_max;
  if (r.low_signal) rep.warnings.push_back("LowSignal: remainder fit has R^2 < 0.5");
}

void run_exit_tail(const ExperimentConfig& c, const GibbsModel& m, const RealFunction& f, RunReport& rep) {
  need_n(c, 1);
  McOptions mc;
  mc.samples = c.samples;
  mc.seed = c.seed;
  mc.workers = c.workers;
  ExitTailResult r = exit_tail_experiment(m, f, c.a, c.b, c.n, method_of(c), c.grid_h, mc);
  rep.columns = {"n", "integral", "error", "scaled_ratio"};
  for (const auto& row : r.rows)
    rep.rows.push_back({std::to_string(row.n), num(row.integral), num(row.error), num(row.scaled_ratio)});
  rep.summary["v_integral"] = r.v_integral;
  rep.summary["v_error"] = r.v_error;
  rep.summary["v_integral_raw"] = r.v_integral_raw;
  rep.summary["sigma2"] = r.sigma2;
  rep.summary["method"] = r.method;
}

}  // namespace

RunReport run(const ExperimentConfig& c) {
  validate(c);
  auto t0 = std::chrono::steady_clock::now();
  if (c.budget_states > 0) setenv("CONDLIM_BUDGET_STATES", std::to_string(c.budget_states).c_str(), 1);
  RunReport rep;
  rep.config = config_to_json(c);
  std::string text = read_file(c.model);
  rep.model_hash = git_blob_sha1(text);
  ModelFile mf = parse_model(text);
  if (c.experiment == "normalize") {
    run_normalize(c, mf, rep);
  } else {
    NormalizeOptions no;
    no.tol = c.tol;
    no.depth = c.depth;
    GibbsModel m = gibbs_model(mf, no);
    const RealFunction& f = model_function(mf, c.observable);
    if (c.experiment == "variance") run_variance(c, m, f, rep);
    else if (c.experiment == "spectrum") run_spectrum(c, m, f, rep);
    else if (c.experiment == "survive") run_survive(c, m, f, rep);
    else if (c.experiment == "duality") run_duality(c, m, f, rep);
    else if (c.experiment == "harmonic") run_harmonic(c, m, f, rep);
    else if (c.experiment == "mu") run_mu(c, m, f, rep);
    else if (c.experiment == "cclt") run_cclt(c, m, f, rep);
    else if (c.experiment == "cllt") run_cllt(c, m, f, rep);
    else if (c.experiment == "llt") run_llt(c, m, f, rep);
    else if (c.experiment == "exit_tail") run_exit_tail(c, m, f, rep);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!c.output.empty()) {
    write_file_atomic(c.output, rep.csv());
    write_file_atomic(c.output + ".json", rep.to_json().dump(2) + "\n");
  }
  return rep;
}

}  // namespace condlim
