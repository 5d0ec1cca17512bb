#include <dnsde/config.hpp>

#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace dnsde {
namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// One key = value occurrence, with the raw value text still unparsed.
struct RawValue {
  int line = 0;
  std::string key;   // section-qualified
  std::string text;  // trimmed value text
};

bool bare_key_ok(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  return true;
}

// Strips a trailing comment that starts outside quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

double to_double(const RawValue& rv) {
  const char* beg = rv.text.c_str();
  char* end = nullptr;
  const double v = std::strtod(beg, &end);
  if (end == beg || *end != '\0' || !std::isfinite(v))
    throw ParseError(rv.line, rv.key, "expected a finite number, got '" + rv.text + "'");
  return v;
}

long long to_int(const RawValue& rv) {
  if (rv.text.find_first_of(".eE") != std::string::npos)
    throw ParseError(rv.line, rv.key, "expected an integer, got '" + rv.text + "'");
  const char* beg = rv.text.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(beg, &end, 10);
  if (end == beg || *end != '\0')
    throw ParseError(rv.line, rv.key, "expected an integer, got '" + rv.text + "'");
  return v;
}

std::uint64_t to_u64(const RawValue& rv) {
  if (!rv.text.empty() && rv.text[0] == '-')
    throw ParseError(rv.line, rv.key, "expected a nonnegative integer");
  const char* beg = rv.text.c_str();
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(beg, &end, 10);
  if (end == beg || *end != '\0')
    throw ParseError(rv.line, rv.key, "expected an integer, got '" + rv.text + "'");
  return v;
}

std::string to_str(const RawValue& rv) {
  const std::string& t = rv.text;
  if (t.size() < 2 || t.front() != '"' || t.back() != '"')
    throw ParseError(rv.line, rv.key, "expected a quoted string, got '" + t + "'");
  const std::string body = t.substr(1, t.size() - 2);
  if (body.find('"') != std::string::npos)
    throw ParseError(rv.line, rv.key, "escapes are not supported in strings");
  return body;
}

// Splits "[a, b, ...]" at top-level commas; elements may be arrays again.
std::vector<std::string> split_array(const RawValue& rv) {
  const std::string& t = rv.text;
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw ParseError(rv.line, rv.key, "expected an array, got '" + t + "'");
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (size_t i = 1; i + 1 < t.size(); ++i) {
    const char c = t[i];
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (depth < 0) throw ParseError(rv.line, rv.key, "unbalanced brackets");
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) throw ParseError(rv.line, rv.key, "unbalanced brackets");
  const std::string last = trim(cur);
  if (!last.empty()) out.push_back(last);
  if (!cur.empty() && last.empty())
    throw ParseError(rv.line, rv.key, "empty array element");
  return out;
}

std::vector<double> to_double_array(const RawValue& rv) {
  std::vector<double> out;
  for (const std::string& el : split_array(rv))
    out.push_back(to_double(RawValue{rv.line, rv.key, el}));
  return out;
}

std::vector<Breakpoint> to_breakpoints(const RawValue& rv) {
  std::vector<Breakpoint> out;
  for (const std::string& el : split_array(rv)) {
    const std::vector<double> t = to_double_array(RawValue{rv.line, rv.key, el});
    if (t.size() != 3)
      throw ParseError(rv.line, rv.key, "each breakpoint is [r, lo, hi]");
    out.push_back(Breakpoint{t[0], t[1], t[2]});
  }
  return out;
}

using Setter = std::function<void(const RawValue&, ExperimentConfig&)>;

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> s = {
      {"out", [](const RawValue& r, ExperimentConfig& c) { c.out = to_str(r); }},
      {"mesh.n", [](const RawValue& r, ExperimentConfig& c) { c.n = int(to_int(r)); }},
      {"graph.kind", [](const RawValue& r, ExperimentConfig& c) { c.graph.kind = to_str(r); }},
      {"graph.c", [](const RawValue& r, ExperimentConfig& c) { c.graph.c = to_double(r); }},
      {"graph.kappa", [](const RawValue& r, ExperimentConfig& c) { c.graph.kappa = to_double(r); }},
      {"graph.inner", [](const RawValue& r, ExperimentConfig& c) { c.graph.inner = to_str(r); }},
      {"graph.breakpoints",
       [](const RawValue& r, ExperimentConfig& c) { c.graph.breakpoints = to_breakpoints(r); }},
      {"A.mode", [](const RawValue& r, ExperimentConfig& c) { c.A.mode = to_str(r); }},
      {"A.c", [](const RawValue& r, ExperimentConfig& c) { c.A.c = to_double(r); }},
      {"A.kernel", [](const RawValue& r, ExperimentConfig& c) { c.A.kernel = to_str(r); }},
      {"A.width", [](const RawValue& r, ExperimentConfig& c) { c.A.width = to_double(r); }},
      {"A.scale", [](const RawValue& r, ExperimentConfig& c) { c.A.scale = to_double(r); }},
      {"B.flux", [](const RawValue& r, ExperimentConfig& c) { c.B.flux = to_str(r); }},
      {"B.a", [](const RawValue& r, ExperimentConfig& c) { c.B.a = to_double(r); }},
      {"B.b", [](const RawValue& r, ExperimentConfig& c) { c.B.b = to_double(r); }},
      {"B.beta0", [](const RawValue& r, ExperimentConfig& c) { c.B.beta0 = to_str(r); }},
      {"B.fractional_s",
       [](const RawValue& r, ExperimentConfig& c) { c.B.fractional_s = to_double(r); }},
      {"noise.K", [](const RawValue& r, ExperimentConfig& c) { c.noise.K = int(to_int(r)); }},
      {"noise.sigma0",
       [](const RawValue& r, ExperimentConfig& c) { c.noise.sigma0 = to_double(r); }},
      {"noise.p", [](const RawValue& r, ExperimentConfig& c) { c.noise.p = to_double(r); }},
      {"noise.mult", [](const RawValue& r, ExperimentConfig& c) { c.noise.mult = to_str(r); }},
      {"noise.bound_c",
       [](const RawValue& r, ExperimentConfig& c) { c.noise.bound_c = to_double(r); }},
      {"F.a", [](const RawValue& r, ExperimentConfig& c) { c.F.a = to_double(r); }},
      {"F.b_k", [](const RawValue& r, ExperimentConfig& c) { c.F.b_k = int(to_int(r)); }},
      {"F.b_amplitude",
       [](const RawValue& r, ExperimentConfig& c) { c.F.b_amplitude = to_double(r); }},
      {"v0.profile", [](const RawValue& r, ExperimentConfig& c) { c.v0.profile = to_str(r); }},
      {"v0.k", [](const RawValue& r, ExperimentConfig& c) { c.v0.k = int(to_int(r)); }},
      {"v0.amplitude",
       [](const RawValue& r, ExperimentConfig& c) { c.v0.amplitude = to_double(r); }},
      {"v0.value", [](const RawValue& r, ExperimentConfig& c) { c.v0.value = to_double(r); }},
      {"v0.path", [](const RawValue& r, ExperimentConfig& c) { c.v0.path = to_str(r); }},
      {"solver.scheme",
       [](const RawValue& r, ExperimentConfig& c) { c.solver.scheme = to_str(r); }},
      {"solver.lambda",
       [](const RawValue& r, ExperimentConfig& c) { c.solver.lambda = to_double(r); }},
      {"solver.eps", [](const RawValue& r, ExperimentConfig& c) { c.solver.eps = to_double(r); }},
      {"solver.dt", [](const RawValue& r, ExperimentConfig& c) { c.solver.dt = to_double(r); }},
      {"solver.T", [](const RawValue& r, ExperimentConfig& c) { c.solver.T = to_double(r); }},
      {"solver.seed", [](const RawValue& r, ExperimentConfig& c) { c.solver.seed = to_u64(r); }},
      {"experiment.paths",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.paths = int(to_int(r)); }},
      {"experiment.lambdas",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.lambdas = to_double_array(r); }},
      {"experiment.dts",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.dts = to_double_array(r); }},
      {"experiment.levels",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.levels = int(to_int(r)); }},
      {"experiment.uniq_dt",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.uniq_dt = to_double(r); }},
      {"experiment.uniq_lambda",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.uniq_lambda = to_double(r); }},
      {"experiment.uniq_eps",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.uniq_eps = to_double(r); }},
      {"experiment.uniq_T",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.uniq_T = to_double(r); }},
      {"experiment.sweep",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.sweep = to_double_array(r); }},
      {"experiment.sweep_dt",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.sweep_dt = to_double(r); }},
      {"experiment.sweep_T",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.sweep_T = to_double(r); }},
      {"experiment.samples",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.samples = int(to_int(r)); }},
      {"experiment.range",
       [](const RawValue& r, ExperimentConfig& c) { c.experiment.range = to_double(r); }},
  };
  return s;
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"mesh", "graph", "A",  "B",     "noise",
                                          "F",    "v0",    "solver", "experiment"};
  return s;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_array(const std::vector<double>& vals) {
  std::string out = "[";
  for (size_t i = 0; i < vals.size(); ++i) {
    if (i) out += ", ";
    out += fmt_num(vals[i]);
  }
  return out + "]";
}

bool is_simple_kind(const std::string& k) {
  return k == "identity" || k == "sign" || k == "stefan" || k == "stefan-smooth";
}

ScalarGraph build_simple(const std::string& kind, double kappa) {
  if (kind == "identity") return graphs::identity();
  if (kind == "sign") return graphs::sign();
  if (kind == "stefan") return graphs::stefan();
  return graphs::stefan_smooth(kappa);
}

void require(bool ok, const std::string& field, const std::string& reason) {
  if (!ok) throw ValidationError(field, reason);
}

void require_positive(double v, const std::string& field) {
  require(std::isfinite(v) && v > 0.0, field, "must be positive");
}

void require_positive_list(const std::vector<double>& vals, const std::string& field) {
  require(!vals.empty(), field, "must not be empty");
  for (double v : vals)
    require(std::isfinite(v) && v > 0.0, field, "entries must be positive");
}

}  // namespace

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;  // the defaults are the stefan scenario
  if (name == "stefan") return cfg;
  if (name == "nonlocal-a") {
    cfg.graph.kind = "identity";
    cfg.A.mode = "nonlocal";
    cfg.A.c = 1.0;
    cfg.A.kernel = "gaussian";
    cfg.A.width = 8.0;
    cfg.A.scale = 1.0;
    return cfg;
  }
  if (name == "fractional-b") {
    cfg.graph.kind = "sum-with-identity";
    cfg.graph.inner = "sign";
    cfg.graph.c = 1.0;
    cfg.B.fractional_s = 0.5;
    return cfg;
  }
  if (name == "stress-stefan") {
    cfg.graph.kind = "stefan";
    return cfg;
  }
  throw ValidationError("preset", "unknown preset '" + name + "'");
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
  std::istringstream is(text);
  std::string raw;
  std::string section;
  std::map<std::string, RawValue> seen;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(line, s, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!known_sections().count(section))
        throw ParseError(line, section, "unknown section");
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(line, s, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    if (!bare_key_ok(key)) throw ParseError(line, key, "malformed key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!schema().count(full)) throw ParseError(line, key, "unknown key");
    if (seen.count(full)) throw ParseError(line, key, "duplicate key");
    seen[full] = RawValue{line, key, trim(s.substr(eq + 1))};
  }
  for (const auto& [full, rv] : seen) schema().at(full)(rv, base);
  validate(base);
  return base;
}

ExperimentConfig parse_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ParseError(0, path, "cannot open config file");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

ExperimentConfig parse_config(const std::string& path) {
  return parse_config(path, ExperimentConfig{});
}

void validate(const ExperimentConfig& cfg) {
  require(cfg.n >= 2, "mesh.n", "need at least 2 interior nodes");
  require(!cfg.out.empty(), "out", "must not be empty");

  const std::string& gk = cfg.graph.kind;
  require(is_simple_kind(gk) || gk == "scaled-identity" || gk == "piecewise-linear" ||
              gk == "sum-with-identity",
          "graph.kind", "unknown graph kind '" + gk + "'");
  require(std::isfinite(cfg.graph.kappa) && cfg.graph.kappa >= 0.0, "graph.kappa",
          "must be nonnegative");
  if (gk == "scaled-identity" || gk == "sum-with-identity")
    require_positive(cfg.graph.c, "graph.c");
  if (gk == "piecewise-linear")
    require(cfg.graph.breakpoints.size() >= 2, "graph.breakpoints",
            "need at least two points");
  if (gk == "sum-with-identity")
    require(is_simple_kind(cfg.graph.inner), "graph.inner",
            "must be identity, sign, stefan, or stefan-smooth");

  require(cfg.A.mode == "pointwise" || cfg.A.mode == "nonlocal", "A.mode",
          "must be pointwise or nonlocal");
  if (cfg.A.mode == "nonlocal") {
    require_positive(cfg.A.c, "A.c");
    require(cfg.A.kernel == "gaussian", "A.kernel", "unknown kernel '" + cfg.A.kernel + "'");
    require_positive(cfg.A.width, "A.width");
    require(std::isfinite(cfg.A.scale) && cfg.A.scale >= 0.0, "A.scale",
            "must be nonnegative");
  }

  require(cfg.B.flux == "linear" || cfg.B.flux == "linear-plus-arctan", "B.flux",
          "must be linear or linear-plus-arctan");
  require_positive(cfg.B.a, "B.a");
  require(std::isfinite(cfg.B.b) && cfg.B.b >= 0.0, "B.b", "must be nonnegative");
  require(cfg.B.beta0.empty() || is_simple_kind(cfg.B.beta0), "B.beta0",
          "must be empty, identity, sign, stefan, or stefan-smooth");
  if (cfg.B.fractional_s)
    require(std::isfinite(*cfg.B.fractional_s) && *cfg.B.fractional_s > 0.0 &&
                *cfg.B.fractional_s <= 1.0,
            "B.fractional_s", "must lie in (0, 1]");

  require(cfg.noise.K >= 0, "noise.K", "must be nonnegative");
  require(std::isfinite(cfg.noise.sigma0) && cfg.noise.sigma0 >= 0.0, "noise.sigma0",
          "must be nonnegative");
  require(std::isfinite(cfg.noise.p) && cfg.noise.p > 0.5, "noise.p",
          "amplitudes must be square-summable: need p > 1/2");
  require(cfg.noise.mult == "additive" || cfg.noise.mult == "linear" ||
              cfg.noise.mult == "bounded-linear",
          "noise.mult", "must be additive, linear, or bounded-linear");
  require_positive(cfg.noise.bound_c, "noise.bound_c");
  require(cfg.noise.K <= cfg.n, "noise.K", "mode count cannot exceed mesh.n");

  require(std::isfinite(cfg.F.a), "F.a", "must be finite");
  require(std::isfinite(cfg.F.b_amplitude), "F.b_amplitude", "must be finite");
  if (cfg.F.b_amplitude != 0.0)
    require(cfg.F.b_k >= 1 && cfg.F.b_k <= cfg.n, "F.b_k", "must lie in 1..mesh.n");

  const std::string& vp = cfg.v0.profile;
  require(vp == "sine" || vp == "constant-in-plateau" || vp == "file", "v0.profile",
          "must be sine, constant-in-plateau, or file");
  if (vp == "sine") {
    require(cfg.v0.k >= 1 && cfg.v0.k <= cfg.n, "v0.k", "must lie in 1..mesh.n");
    require(std::isfinite(cfg.v0.amplitude), "v0.amplitude", "must be finite");
  }
  if (vp == "constant-in-plateau") {
    require(cfg.A.mode == "pointwise", "v0.profile",
            "constant-in-plateau requires a pointwise graph");
    const ScalarGraph g = build_graph(cfg.graph);
    require(std::isfinite(cfg.v0.value) && gamma(g, cfg.v0.value) == 0.0, "v0.value",
            "not inside the graph plateau");
  }
  if (vp == "file") require(!cfg.v0.path.empty(), "v0.path", "must not be empty");

  const std::string& sch = cfg.solver.scheme;
  require(sch == "explicit" || sch == "semi-implicit" || sch == "implicit-limit",
          "solver.scheme", "must be explicit, semi-implicit, or implicit-limit");
  require_positive(cfg.solver.lambda, "solver.lambda");
  require_positive(cfg.solver.eps, "solver.eps");
  require_positive(cfg.solver.dt, "solver.dt");
  require(std::isfinite(cfg.solver.T) && cfg.solver.T >= 0.0, "solver.T",
          "must be nonnegative");

  const NemytskiiA A = build_A(cfg);
  require(cfg.solver.eps * monotonicity_constant(A) < 1.0, "eps",
          "must be < 1/c_alpha");

  const ExperimentSpec& ex = cfg.experiment;
  require(ex.paths >= 1, "experiment.paths", "must be at least 1");
  require_positive_list(ex.lambdas, "experiment.lambdas");
  require_positive_list(ex.dts, "experiment.dts");
  require(ex.levels >= 1, "experiment.levels", "must be at least 1");
  require_positive(ex.uniq_dt, "experiment.uniq_dt");
  require_positive(ex.uniq_lambda, "experiment.uniq_lambda");
  require_positive(ex.uniq_eps, "experiment.uniq_eps");
  require_positive(ex.uniq_T, "experiment.uniq_T");
  require_positive_list(ex.sweep, "experiment.sweep");
  require_positive(ex.sweep_dt, "experiment.sweep_dt");
  require_positive(ex.sweep_T, "experiment.sweep_T");
  require(ex.samples >= 100, "experiment.samples", "must be at least 100");
  require_positive(ex.range, "experiment.range");

  if (cfg.A.mode == "pointwise") {
    const ScalarGraph g = build_graph(cfg.graph);
    const HypothesisReport rep =
        validate_hypotheses(g, -ex.range, ex.range, std::max(ex.samples, 200));
    if (!rep.gamma_c1)
      std::fprintf(stderr,
                   "hypothesis warning: graph '%s' has a non-C1 inverse "
                   "(derivative jump %.3g near %.6g); results sit outside "
                   "the guaranteed regime\n",
                   graph_name(g).c_str(), rep.gamma_jump, rep.gamma_jump_at);
  }
}

// The output directory is canonicalization-exempt: it does not influence
// any computed value, and artifacts written to two places from one setup
// must carry one hash.
std::string canonical_text(const ExperimentConfig& cfg) {
  std::string t;
  t += "[mesh]\nn = " + std::to_string(cfg.n) + "\n";
  t += "[graph]\nkind = \"" + cfg.graph.kind + "\"\n";
  t += "c = " + fmt_num(cfg.graph.c) + "\n";
  t += "kappa = " + fmt_num(cfg.graph.kappa) + "\n";
  t += "inner = \"" + cfg.graph.inner + "\"\n";
  t += "breakpoints = [";
  for (size_t i = 0; i < cfg.graph.breakpoints.size(); ++i) {
    const Breakpoint& b = cfg.graph.breakpoints[i];
    if (i) t += ", ";
    t += "[" + fmt_num(b.r) + ", " + fmt_num(b.lo) + ", " + fmt_num(b.hi) + "]";
  }
  t += "]\n";
  t += "[A]\nmode = \"" + cfg.A.mode + "\"\n";
  t += "c = " + fmt_num(cfg.A.c) + "\n";
  t += "kernel = \"" + cfg.A.kernel + "\"\n";
  t += "width = " + fmt_num(cfg.A.width) + "\n";
  t += "scale = " + fmt_num(cfg.A.scale) + "\n";
  t += "[B]\nflux = \"" + cfg.B.flux + "\"\n";
  t += "a = " + fmt_num(cfg.B.a) + "\n";
  t += "b = " + fmt_num(cfg.B.b) + "\n";
  t += "beta0 = \"" + cfg.B.beta0 + "\"\n";
  t += "fractional_s = ";
  t += cfg.B.fractional_s ? fmt_num(*cfg.B.fractional_s) : std::string("none");
  t += "\n";
  t += "[noise]\nK = " + std::to_string(cfg.noise.K) + "\n";
  t += "sigma0 = " + fmt_num(cfg.noise.sigma0) + "\n";
  t += "p = " + fmt_num(cfg.noise.p) + "\n";
  t += "mult = \"" + cfg.noise.mult + "\"\n";
  t += "bound_c = " + fmt_num(cfg.noise.bound_c) + "\n";
  t += "[F]\na = " + fmt_num(cfg.F.a) + "\n";
  t += "b_k = " + std::to_string(cfg.F.b_k) + "\n";
  t += "b_amplitude = " + fmt_num(cfg.F.b_amplitude) + "\n";
  t += "[v0]\nprofile = \"" + cfg.v0.profile + "\"\n";
  t += "k = " + std::to_string(cfg.v0.k) + "\n";
  t += "amplitude = " + fmt_num(cfg.v0.amplitude) + "\n";
  t += "value = " + fmt_num(cfg.v0.value) + "\n";
  t += "path = \"" + cfg.v0.path + "\"\n";
  t += "[solver]\nscheme = \"" + cfg.solver.scheme + "\"\n";
  t += "lambda = " + fmt_num(cfg.solver.lambda) + "\n";
  t += "eps = " + fmt_num(cfg.solver.eps) + "\n";
  t += "dt = " + fmt_num(cfg.solver.dt) + "\n";
  t += "T = " + fmt_num(cfg.solver.T) + "\n";
  char seed[32];
  std::snprintf(seed, sizeof seed, "%" PRIu64, cfg.solver.seed);
  t += std::string("seed = ") + seed + "\n";
  t += "[experiment]\npaths = " + std::to_string(cfg.experiment.paths) + "\n";
  t += "lambdas = " + fmt_array(cfg.experiment.lambdas) + "\n";
  t += "dts = " + fmt_array(cfg.experiment.dts) + "\n";
  t += "levels = " + std::to_string(cfg.experiment.levels) + "\n";
  t += "uniq_dt = " + fmt_num(cfg.experiment.uniq_dt) + "\n";
  t += "uniq_lambda = " + fmt_num(cfg.experiment.uniq_lambda) + "\n";
  t += "uniq_eps = " + fmt_num(cfg.experiment.uniq_eps) + "\n";
  t += "uniq_T = " + fmt_num(cfg.experiment.uniq_T) + "\n";
  t += "sweep = " + fmt_array(cfg.experiment.sweep) + "\n";
  t += "sweep_dt = " + fmt_num(cfg.experiment.sweep_dt) + "\n";
  t += "sweep_T = " + fmt_num(cfg.experiment.sweep_T) + "\n";
  t += "samples = " + std::to_string(cfg.experiment.samples) + "\n";
  t += "range = " + fmt_num(cfg.experiment.range) + "\n";
  return t;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string t = canonical_text(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : t) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, config_hash(cfg));
  return buf;
}

Mesh1D config_mesh(const ExperimentConfig& cfg) { return make_mesh(cfg.n); }

ScalarGraph build_graph(const GraphSpec& spec) {
  try {
    if (spec.kind == "scaled-identity") return graphs::scaled_identity(spec.c);
    if (spec.kind == "piecewise-linear") return graphs::piecewise_linear(spec.breakpoints);
    if (spec.kind == "sum-with-identity")
      return graphs::sum_with_identity(build_simple(spec.inner, spec.kappa), spec.c);
    if (is_simple_kind(spec.kind)) return build_simple(spec.kind, spec.kappa);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError("graph", e.what());
  }
  throw ValidationError("graph.kind", "unknown graph kind '" + spec.kind + "'");
}

NemytskiiA build_A(const ExperimentConfig& cfg) {
  if (cfg.A.mode == "pointwise") return pointwise_A(build_graph(cfg.graph));
  const Mesh1D m = config_mesh(cfg);
  std::vector<double> kernel(size_t(m.n) * m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      const double d = node_x(m, i) - node_x(m, j);
      kernel[size_t(i) * m.n + j] = cfg.A.scale * std::exp(-cfg.A.width * d * d);
    }
  return nonlocal_A(cfg.A.c, std::move(kernel), m.n);
}

DivergenceFormB build_B(const ExperimentConfig& cfg) {
  const Flux q = cfg.B.flux == "linear" ? linear_flux(cfg.B.a)
                                        : linear_plus_arctan_flux(cfg.B.a, cfg.B.b);
  std::optional<ScalarGraph> beta0;
  if (!cfg.B.beta0.empty()) beta0 = build_simple(cfg.B.beta0, 1.0);
  return make_divergence_B(q, beta0, cfg.B.fractional_s);
}

NoiseModel build_noise(const ExperimentConfig& cfg) {
  const MultKind mult = cfg.noise.mult == "additive" ? MultKind::Additive
                        : cfg.noise.mult == "linear" ? MultKind::Linear
                                                     : MultKind::BoundedLinear;
  return make_noise(config_mesh(cfg), cfg.noise.K, cfg.noise.sigma0, cfg.noise.p, mult,
                    cfg.noise.bound_c);
}

DualGridFunction build_v0(const ExperimentConfig& cfg) {
  const Mesh1D m = config_mesh(cfg);
  if (cfg.v0.profile == "sine") {
    GridFunction g = eigenvector_R(m, cfg.v0.k);
    for (double& v : g.val) v *= cfg.v0.amplitude;
    return as_dual(g);
  }
  if (cfg.v0.profile == "constant-in-plateau") {
    DualGridFunction v = make_dual(m);
    for (double& x : v.val) x = cfg.v0.value;
    return v;
  }
  std::ifstream f(cfg.v0.path);
  if (!f) throw ValidationError("v0.path", "cannot open '" + cfg.v0.path + "'");
  const GridFunction g = read_grid_csv(f);
  if (g.mesh.n != m.n)
    throw ValidationError("v0.path", "grid has " + std::to_string(g.mesh.n) +
                                         " nodes, mesh.n is " + std::to_string(m.n));
  return make_dual(m, g.val);
}

SolverConfig build_solver(const ExperimentConfig& cfg) {
  SolverConfig sc;
  sc.scheme = cfg.solver.scheme == "explicit"      ? Scheme::ExplicitRegularized
              : cfg.solver.scheme == "semi-implicit" ? Scheme::SemiImplicitRegularized
                                                     : Scheme::ImplicitLimit;
  sc.lambda = cfg.solver.lambda;
  sc.eps = cfg.solver.eps;
  sc.dt = cfg.solver.dt;
  sc.T = cfg.solver.T;
  sc.seed = cfg.solver.seed;
  sc.drift.a = cfg.F.a;
  if (cfg.F.b_amplitude != 0.0) {
    GridFunction b = eigenvector_R(config_mesh(cfg), cfg.F.b_k);
    for (double& v : b.val) v *= cfg.F.b_amplitude;
    sc.drift.b = std::move(b);
  }
  sc.v0 = build_v0(cfg);
  return sc;
}

}  // namespace dnsde
