// nlkpp command-line front end. Uses only the C interface of libnlkpp.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nlkpp/nlkpp.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitAssumption = 2;
constexpr int kExitNumeric = 3;

int exit_code(nlkpp_status s) {
  switch (s) {
    case NLKPP_OK: return 0;
    case NLKPP_ASSUMPTION_FAILED: return kExitAssumption;
    case NLKPP_ITERATION_STALLED:
    case NLKPP_TAIL_UNDERRESOLVED:
    case NLKPP_FRONT_LEFT_DOMAIN:
    case NLKPP_INTERNAL: return kExitNumeric;
    default: return kExitUsage;
  }
}

// Failure carrying the exit status and JSON diagnostics for the error report.
struct Failure {
  int code;
  std::string kind;
  std::string message;
  json diagnostics = json::object();
};

[[noreturn]] void usage(const std::string& msg) { throw Failure{kExitUsage, "usage", msg}; }

void check(nlkpp_status s, const char* what, json diagnostics = json::object()) {
  if (s == NLKPP_OK) return;
  throw Failure{exit_code(s), nlkpp_status_name(s), std::string(what) + ": " + nlkpp_last_error(),
                std::move(diagnostics)};
}

// JSON number, with non-finite values as strings.
json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct ModelDeleter {
  void operator()(nlkpp_model* m) const { nlkpp_model_free(m); }
};
struct ProfileDeleter {
  void operator()(nlkpp_profile* p) const { nlkpp_profile_free(p); }
};
struct EvolutionDeleter {
  void operator()(nlkpp_evolution* e) const { nlkpp_evolution_free(e); }
};
struct TruncationDeleter {
  void operator()(nlkpp_truncation* t) const { nlkpp_truncation_free(t); }
};
using Model = std::unique_ptr<nlkpp_model, ModelDeleter>;
using Profile = std::unique_ptr<nlkpp_profile, ProfileDeleter>;
using Evolution = std::unique_ptr<nlkpp_evolution, EvolutionDeleter>;
using Truncation = std::unique_ptr<nlkpp_truncation, TruncationDeleter>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { nlkpp_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

int worker_count() {
  if (const char* env = std::getenv("NLKPP_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 1024) usage("NLKPP_WORKERS must be an integer in [1, 1024]");
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Options shared by the model-based subcommands.
struct Common {
  std::string kernel;
  std::string params;
  std::string out;
  bool csv = false;
};

json params_json(const nlkpp_params& p) {
  return json{{"kappa_plus", num(p.kappa_plus)},
              {"m", num(p.m)},
              {"kappa_local", num(p.kappa_local)},
              {"kappa_nonlocal", num(p.kappa_nonlocal)}};
}

// --params: a JSON file ({"params": {...}} or the block itself), inline JSON, or k=v,k=v.
nlkpp_params parse_params(const std::string& spec, nlkpp_params base) {
  json j;
  const std::string text = fs::is_regular_file(spec) ? read_file(spec) : spec;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      usage(std::string("--params: ") + e.what());
    }
    if (j.contains("params")) j = j["params"];
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) usage("--params: expected key=value, got \"" + item + "\"");
      try {
        j[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        usage("--params: bad number in \"" + item + "\"");
      }
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) usage("--params: " + key + " must be a number");
    const double v = value.get<double>();
    if (key == "kappa_plus") base.kappa_plus = v;
    else if (key == "m") base.m = v;
    else if (key == "kappa_local") base.kappa_local = v;
    else if (key == "kappa_nonlocal") base.kappa_nonlocal = v;
    else usage("--params: unknown parameter " + key);
  }
  return base;
}

Model load_model(const Common& c) {
  if (c.kernel.empty()) usage("--kernel is required");
  if (!fs::is_regular_file(c.kernel)) usage("cannot read " + c.kernel);
  nlkpp_model* raw = nullptr;
  check(nlkpp_model_load(c.kernel.c_str(), &raw), "loading the kernel file");
  Model m(raw);
  if (!c.params.empty()) {
    nlkpp_params p;
    check(nlkpp_model_params(m.get(), &p), "reading parameters");
    p = parse_params(c.params, p);
    nlkpp_model* other = nullptr;
    check(nlkpp_model_with_params(m.get(), &p, &other), "applying --params");
    m.reset(other);
  }
  return m;
}

json model_json(const nlkpp_model* m) {
  OwnedString s;
  check(nlkpp_model_json(m, &s.s), "describing the model");
  return json::parse(s.str());
}

// Assumption report plus the first blocking id.
std::pair<json, std::string> assumptions(const nlkpp_model* m) {
  OwnedString report, blocking;
  check(nlkpp_check(m, &report.s, &blocking.s), "checking assumptions");
  return {json::parse(report.str()), blocking.str()};
}

// Runs a call that may fail on assumptions; on failure the report names the assumption.
void check_model_call(nlkpp_status s, const char* what, const nlkpp_model* m, json diagnostics = json::object()) {
  if (s == NLKPP_ASSUMPTION_FAILED) {
    const std::string msg = nlkpp_last_error();
    auto [report, blocking] = assumptions(m);
    diagnostics["assumption"] = blocking;
    diagnostics["assumptions"] = report;
    throw Failure{kExitAssumption, nlkpp_status_name(s), std::string(what) + ": " + msg, diagnostics};
  }
  check(s, what, std::move(diagnostics));
}

json dispersion_json(const nlkpp_dispersion& d) {
  static const char* kinds[] = {"unbounded", "open_end", "closed_end"};
  return json{{"lambda_star", num(d.lambda_star)},
              {"c_star", num(d.c_star)},
              {"class", d.kernel_class == NLKPP_CLASS_W ? "W" : "V"},
              {"sigma_plus", num(d.sigma_plus)},
              {"interval_kind", kinds[d.interval_kind]},
              {"T_at_sigma", num(d.t_at_sigma)},
              {"m_xi", num(d.m_xi)},
              {"critical_equality", d.critical_equality != 0},
              {"tie_tolerance", num(d.tie_tolerance)}};
}

// Collects the result, CSV tables and manifest of one run and writes them.
class Output {
 public:
  Output(std::string command, const Common& common) : command_(std::move(command)), common_(common) {
    start_ = std::chrono::steady_clock::now();
    manifest_["tool"] = "nlkpp";
    manifest_["version"] = nlkpp_version();
    manifest_["command"] = command_;
    manifest_["inputs"] = json::array();
    if (!common.kernel.empty()) manifest_["inputs"].push_back(common.kernel);
    manifest_["parameters"] = json::object();
    manifest_["tolerances"] = json::object();
  }

  json& result() { return result_; }
  json& parameters() { return manifest_["parameters"]; }
  json& tolerances() { return manifest_["tolerances"]; }
  void add_input(const std::string& path) { manifest_["inputs"].push_back(path); }

  bool csv_wanted() const { return common_.csv; }
  std::string manifest_name() const { return command_ + ".manifest.json"; }

  // CSV table written when --csv is given; the first line names the manifest.
  void add_csv(const std::string& name, const std::string& body) {
    if (!common_.csv) return;
    tables_.emplace_back(name, "# manifest: " + manifest_name() + "\n" + body);
  }

  int finish(int code, const Failure* failure = nullptr) {
    json doc;
    doc["command"] = command_;
    doc["status"] = failure ? "error" : "ok";
    doc["manifest"] = manifest_name();
    if (failure) {
      doc["error"] = json{{"kind", failure->kind}, {"message", failure->message}, {"diagnostics", failure->diagnostics}};
    }
    for (auto& [k, v] : result_.items()) doc[k] = v;
    const std::string text = doc.dump(2) + "\n";
    std::cout << text;
    if (!common_.out.empty() || (common_.csv && !tables_.empty())) write_files(text, code);
    return code;
  }

 private:
  void write_files(const std::string& text, int code) {
    const fs::path dir = common_.out.empty() ? fs::path(".") : fs::path(common_.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      std::cerr << "nlkpp: cannot create " << dir << ": " << ec.message() << "\n";
      return;
    }
    json outputs = json::array();
    auto put = [&](const std::string& name, const std::string& body) {
      std::ofstream f(dir / name, std::ios::binary);
      f << body;
      if (!f) std::cerr << "nlkpp: cannot write " << (dir / name) << "\n";
      outputs.push_back(name);
    };
    put(command_ + ".json", text);
    for (const auto& [name, body] : tables_) put(name, body);
    manifest_["outputs"] = outputs;
    manifest_["exit_code"] = code;
    manifest_["workers"] = worker_count_safe();
    manifest_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream f(dir / manifest_name(), std::ios::binary);
    f << manifest_.dump(2) << "\n";
  }

  static int worker_count_safe() {
    try {
      return worker_count();
    } catch (const Failure&) {
      return 1;
    }
  }

  std::string command_;
  const Common& common_;
  json result_ = json::object();
  json manifest_;
  std::vector<std::pair<std::string, std::string>> tables_;
  std::chrono::steady_clock::time_point start_;
};

void add_common(CLI::App* sub, Common& c, bool with_kernel = true) {
  if (with_kernel) {
    sub->add_option("--kernel", c.kernel, "Model JSON file (params plus kernels)")->required();
    sub->add_option("--params", c.params, "Parameter override: JSON file, inline JSON or k=v,k=v");
  }
  sub->add_option("--out", c.out, "Directory for JSON, CSV and manifest files");
  sub->add_flag("--csv", c.csv, "Also write CSV tables");
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return v;
}

std::string dispersion_table(const nlkpp_model* m, double c, double lambda_max, int points) {
  std::vector<double> lambdas = linspace(lambda_max / points, lambda_max, points);
  OwnedString s;
  check(nlkpp_dispersion_csv(m, c, lambdas.data(), lambdas.size(), &s.s), "tabulating the dispersion relation");
  return s.str();
}

// ---------------------------------------------------------------- check

int run_check(const Common& c) {
  Output out("check", c);
  try {
    Model m = load_model(c);
    auto [report, blocking] = assumptions(m.get());
    nlkpp_params p;
    check(nlkpp_model_params(m.get(), &p), "reading parameters");
    out.parameters() = params_json(p);
    std::vector<std::string> failing;
    for (const auto& e : report)
      if (e["status"] == "fails") failing.push_back(e["id"].get<std::string>());
    out.result()["model"] = model_json(m.get());
    out.result()["assumptions"] = report;
    out.result()["blocking"] = blocking;
    out.result()["failing"] = failing;
    out.result()["dispersion_ready"] = blocking.empty();
    if (!failing.empty()) {
      Failure f{kExitAssumption, "assumption-failed", "assumption " + failing.front() + " fails",
                json{{"assumption", failing.front()}}};
      return out.finish(f.code, &f);
    }
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

// ---------------------------------------------------------------- classify / speed

struct SpeedOptions {
  double c = std::nan("");
  double lambda_max = 0.0;
  int points = 400;
};

int run_speed(const std::string& name, const Common& c, const SpeedOptions& o) {
  Output out(name, c);
  try {
    Model m = load_model(c);
    nlkpp_params p;
    check(nlkpp_model_params(m.get(), &p), "reading parameters");
    out.parameters() = params_json(p);
    nlkpp_dispersion d;
    check_model_call(nlkpp_minimal_speed(m.get(), &d), "minimal speed", m.get());
    out.result()["model"] = model_json(m.get());
    out.result()["dispersion"] = dispersion_json(d);
    double c_table = d.c_star;
    if (!std::isnan(o.c)) {
      out.parameters()["c"] = num(o.c);
      double lambda = 0.0;
      int j = 0;
      check_model_call(nlkpp_speed_to_abscissa(m.get(), o.c, &lambda, &j), "speed to abscissa", m.get(),
                       json{{"c", num(o.c)}, {"c_star", num(d.c_star)}});
      out.result()["speed"] = json{{"c", num(o.c)}, {"lambda_c", num(lambda)}, {"multiplicity", j}};
      c_table = o.c;
    }
    if (out.csv_wanted()) {
      double top = o.lambda_max > 0 ? o.lambda_max : 3.0 * d.lambda_star;
      if (std::isfinite(d.sigma_plus)) top = std::min(top, d.sigma_plus);
      out.parameters()["table"] = json{{"lambda_max", num(top)}, {"points", o.points}, {"c", num(c_table)}};
      out.add_csv(name + "_dispersion.csv", dispersion_table(m.get(), c_table, top, o.points));
    }
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

// ---------------------------------------------------------------- profile / uniqueness

struct ProfileOptions {
  double c = std::nan("");
  nlkpp_profile_config cfg{};
  std::string normalize = "half_theta";
  double tail_lo = 1e-12;
  double tail_hi = 1e-3;
  double anchor_b = 5.0;
  double unique_tol = 1e-5;
};

json profile_config_json(const nlkpp_profile_config& cfg, const std::string& normalize) {
  return json{{"grid_l", num(cfg.grid_l)},     {"grid_h", num(cfg.grid_h)},       {"anchor", num(cfg.anchor)},
              {"tol", num(cfg.tol)},           {"residual_tol", num(cfg.residual_tol)},
              {"max_sweeps", cfg.max_sweeps},  {"sweep_tol", num(cfg.sweep_tol)}, {"max_newton", cfg.max_newton},
              {"normalize", normalize}};
}

int shift_mode(const std::string& s) {
  if (s == "none") return NLKPP_SHIFT_NONE;
  if (s == "half_theta") return NLKPP_SHIFT_HALF_THETA;
  if (s == "unit_d") return NLKPP_SHIFT_UNIT_D;
  usage("--normalize must be none, half_theta or unit_d");
}

Profile solve(const nlkpp_model* m, double c, const nlkpp_profile_config& cfg) {
  nlkpp_profile* raw = nullptr;
  check_model_call(nlkpp_profile_solve(m, c, &cfg, &raw), "profile solve", m,
                   json{{"c", num(c)}, {"tol", num(cfg.tol)}, {"residual_tol", num(cfg.residual_tol)}});
  return Profile(raw);
}

json profile_json(const nlkpp_profile* p, double tail_lo, double tail_hi) {
  nlkpp_profile_info i;
  check(nlkpp_profile_get_info(p, &i), "profile info");
  double half = 0.0;
  check(nlkpp_profile_half_theta(p, &half), "theta/2 crossing");
  json j{{"speed", num(i.speed)},
         {"speed_discrete", num(i.speed_discrete)},
         {"theta", num(i.theta)},
         {"lambda_c", num(i.lambda_c)},
         {"lambda_discrete", num(i.lambda_discrete)},
         {"multiplicity", i.multiplicity},
         {"increasing", i.increasing != 0},
         {"residual_sup", num(i.residual_sup)},
         {"grid", json{{"start", num(i.grid_start)}, {"h", num(i.h)}, {"points", i.size}}},
         {"half_theta_crossing", num(half)},
         {"solver", json{{"monotone_sweeps", i.monotone_sweeps},
                         {"monotone_violations", i.monotone_violations},
                         {"monotone_max_increase", num(i.monotone_max_increase)},
                         {"newton_steps", i.newton_steps},
                         {"gmres_iterations", i.gmres_iterations}}}};
  nlkpp_tail_fit t;
  const nlkpp_status s = nlkpp_profile_tail(p, tail_lo, tail_hi, &t);
  if (s == NLKPP_OK) {
    j["tail_fit"] = json{{"rate", num(t.rate)},
                         {"rate_relative_error", num(std::abs(t.rate - i.lambda_c) / i.lambda_c)},
                         {"j_estimate", num(t.j_estimate)},
                         {"D_estimate", num(t.d_estimate)},
                         {"window", json::array({num(t.window_lo), num(t.window_hi)})},
                         {"points", t.points},
                         {"fit_residual", num(t.fit_residual)}};
  } else {
    j["tail_fit"] = json{{"error", nlkpp_status_name(s)}, {"message", nlkpp_last_error()}};
  }
  return j;
}

std::string profile_csv(const nlkpp_profile* p) {
  nlkpp_profile_info i;
  check(nlkpp_profile_get_info(p, &i), "profile info");
  const double* v = nullptr;
  size_t n = 0;
  check(nlkpp_profile_values(p, &v, &n), "profile values");
  std::string s = "s,psi\n";
  for (size_t k = 0; k < n; ++k) s += fmt17(i.grid_start + i.h * static_cast<double>(k)) + "," + fmt17(v[k]) + "\n";
  return s;
}

int run_profile(const Common& c, ProfileOptions o) {
  Output out("profile", c);
  try {
    Model m = load_model(c);
    if (std::isnan(o.c)) usage("--c is required");
    o.cfg.normalize = shift_mode(o.normalize);
    nlkpp_params p;
    check(nlkpp_model_params(m.get(), &p), "reading parameters");
    out.parameters() = params_json(p);
    out.parameters()["c"] = num(o.c);
    out.parameters()["solver"] = profile_config_json(o.cfg, o.normalize);
    out.tolerances() = json{{"tol", num(o.cfg.tol)},
                            {"residual_tol", num(o.cfg.residual_tol)},
                            {"sweep_tol", num(o.cfg.sweep_tol)},
                            {"tail_window", json::array({num(o.tail_lo), num(o.tail_hi)})}};
    Profile prof = solve(m.get(), o.c, o.cfg);
    out.result()["profile"] = profile_json(prof.get(), o.tail_lo, o.tail_hi);
    if (out.csv_wanted()) out.add_csv("profile.csv", profile_csv(prof.get()));
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

int run_uniqueness(const Common& c, ProfileOptions o) {
  Output out("uniqueness", c);
  try {
    Model m = load_model(c);
    if (std::isnan(o.c)) usage("--c is required");
    o.cfg.normalize = shift_mode(o.normalize);
    nlkpp_params p;
    check(nlkpp_model_params(m.get(), &p), "reading parameters");
    out.parameters() = params_json(p);
    out.parameters()["c"] = num(o.c);
    out.parameters()["anchors"] = json::array({num(o.cfg.anchor), num(o.anchor_b)});
    out.parameters()["solver"] = profile_config_json(o.cfg, o.normalize);
    out.tolerances() = json{{"tol", num(o.cfg.tol)}, {"residual_tol", num(o.cfg.residual_tol)},
                            {"distance_tol", num(o.unique_tol)}};
    Profile a = solve(m.get(), o.c, o.cfg);
    nlkpp_profile_config cb = o.cfg;
    cb.anchor = o.anchor_b;
    Profile b = solve(m.get(), o.c, cb);
    double dist = 0.0, shift = 0.0;
    check(nlkpp_profile_compare(a.get(), b.get(), &dist, &shift), "shift comparison");
    auto [report, blocking] = assumptions(m.get());
    std::string q7 = "unknown";
    for (const auto& e : report)
      if (e["id"] == "Q7") q7 = e["status"].get<std::string>();
    out.result()["uniqueness"] = json{{"distance", num(dist)},
                                      {"shift", num(shift)},
                                      {"within_tolerance", dist <= o.unique_tol},
                                      {"positivity_near_origin", q7}};
    out.result()["profiles"] = json::array({profile_json(a.get(), o.tail_lo, o.tail_hi),
                                            profile_json(b.get(), o.tail_lo, o.tail_hi)});
    if (out.csv_wanted()) {
      out.add_csv("uniqueness_a.csv", profile_csv(a.get()));
      out.add_csv("uniqueness_b.csv", profile_csv(b.get()));
    }
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

// ---------------------------------------------------------------- evolve

struct EvolveOptions {
  std::string u0 = "step";
  std::string profile_file;
  double height = 0.0;
  double position = 0.0;
  double rate = 1.0;
  nlkpp_evolution_config cfg{};
  double burn_in = 0.3;
  double level = 0.0;
  bool snapshots = false;
};

// Reads an "s,psi" CSV (as written by `profile --csv`) on a uniform grid.
void read_profile_csv(const std::string& path, double& start, double& step, std::vector<double>& values) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<double> s;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 's') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) usage(path + ": expected s,psi rows");
    try {
      s.push_back(std::stod(line.substr(0, comma)));
      values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      usage(path + ": bad number in \"" + line + "\"");
    }
  }
  if (s.size() < 2) usage(path + ": need at least two rows");
  start = s.front();
  step = (s.back() - s.front()) / static_cast<double>(s.size() - 1);
  for (std::size_t i = 1; i < s.size(); ++i)
    if (std::abs(s[i] - s[i - 1] - step) > 1e-6 * step) usage(path + ": grid is not uniform");
}

json speed_fit_json(const nlkpp_speed_fit& f) {
  return json{{"speed", num(f.speed)},         {"intercept", num(f.intercept)}, {"slope_stderr", num(f.slope_stderr)},
              {"t_from", num(f.t_from)},       {"t_to", num(f.t_to)},           {"points", f.points},
              {"burn_in", num(f.burn_in)},     {"level", num(f.level)}};
}

int run_evolve(const Common& c, EvolveOptions o) {
  Output out("evolve", c);
  try {
    Model m = load_model(c);
    nlkpp_initial u0{};
    u0.height = o.height;
    u0.position = o.position;
    u0.rate = o.rate;
    std::vector<double> values;
    if (o.u0 == "step") {
      u0.shape = NLKPP_U0_STEP;
    } else if (o.u0 == "exponential-tail") {
      u0.shape = NLKPP_U0_EXPONENTIAL_TAIL;
    } else if (o.u0 == "constant") {
      u0.shape = NLKPP_U0_CONSTANT;
    } else if (o.u0 == "profile-file") {
      if (o.profile_file.empty()) usage("--u0 profile-file needs --profile-file");
      u0.shape = NLKPP_U0_SAMPLES;
      read_profile_csv(o.profile_file, u0.start, u0.step, values);
      u0.values = values.data();
      u0.count = values.size();
      out.add_input(o.profile_file);
    } else {
      usage("--u0 must be step, exponential-tail, constant or profile-file");
    }
    nlkpp_params p;
    check(nlkpp_model_params(m.get(), &p), "reading parameters");
    out.parameters() = params_json(p);
    out.parameters()["u0"] = json{{"shape", o.u0}, {"height", num(o.height)}, {"position", num(o.position)},
                                  {"rate", num(o.rate)}};
    const auto& g = o.cfg;
    out.parameters()["time_stepping"] =
        json{{"dt", num(g.dt)},       {"T", num(g.t_end)},         {"h", num(g.h)},
             {"x_min", num(g.x_min)}, {"x_max", num(g.x_max)},     {"snapshot_interval", num(g.snapshot_interval)},
             {"widen", g.widen != 0}, {"burn_in", num(o.burn_in)}, {"level", num(o.level)}};
    o.cfg.keep_values = o.snapshots ? 1 : 0;
    nlkpp_evolution* raw = nullptr;
    check(nlkpp_evolve(m.get(), &u0, &o.cfg, &raw), "evolution", json{{"dt", num(g.dt)}});
    Evolution run(raw);
    nlkpp_evolution_info info;
    check(nlkpp_evolution_get_info(run.get(), &info), "evolution info");
    json r{{"theta", num(info.theta)},     {"level", num(info.level)},         {"steps", info.steps},
           {"snapshots", info.snapshots},  {"widenings", info.widenings},      {"max_value", num(info.max_value)},
           {"min_value", num(info.min_value)}};
    for (int side : {NLKPP_FRONT_RIGHT, NLKPP_FRONT_LEFT}) {
      const char* key = side == NLKPP_FRONT_RIGHT ? "right_front" : "left_front";
      bool any = false;
      for (size_t k = 0; k < info.snapshots && !any; ++k) {
        double t, rf, lf;
        check(nlkpp_evolution_front(run.get(), k, &t, &rf, &lf), "front position");
        any = std::isfinite(side == NLKPP_FRONT_RIGHT ? rf : lf);
      }
      if (!any) {
        r[key] = nullptr;
        continue;
      }
      nlkpp_speed_fit f;
      const nlkpp_status s = nlkpp_evolution_speed(run.get(), side, o.burn_in, o.level, &f);
      if (s == NLKPP_OK) r[key] = speed_fit_json(f);
      else r[key] = json{{"error", nlkpp_status_name(s)}, {"message", nlkpp_last_error()}};
    }
    nlkpp_dispersion d;
    if (nlkpp_minimal_speed(m.get(), &d) == NLKPP_OK) r["c_star"] = num(d.c_star);
    out.result()["evolution"] = r;
    if (out.csv_wanted()) {
      std::string fronts = "t,right_front,left_front\n";
      for (size_t k = 0; k < info.snapshots; ++k) {
        double t, rf, lf;
        check(nlkpp_evolution_front(run.get(), k, &t, &rf, &lf), "front position");
        fronts += fmt17(t) + "," + fmt17(rf) + "," + fmt17(lf) + "\n";
      }
      out.add_csv("evolve_fronts.csv", fronts);
      if (o.snapshots) {
        std::string snaps = "t,s,u\n";
        for (size_t k = 0; k < info.snapshots; ++k) {
          double t, start;
          const double* v;
          size_t n;
          check(nlkpp_evolution_snapshot(run.get(), k, &t, &start, &v, &n), "snapshot");
          for (size_t i = 0; i < n; ++i)
            snaps += fmt17(t) + "," + fmt17(start + info.h * static_cast<double>(i)) + "," + fmt17(v[i]) + "\n";
        }
        out.add_csv("evolve_snapshots.csv", snaps);
      }
    }
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

// ---------------------------------------------------------------- truncate-sweep

int run_truncate(const Common& c, const std::vector<double>& radii) {
  Output out("truncate-sweep", c);
  try {
    Model m = load_model(c);
    nlkpp_params p;
    check(nlkpp_model_params(m.get(), &p), "reading parameters");
    out.parameters() = params_json(p);
    out.parameters()["radii"] = radii;
    const int workers = worker_count();
    nlkpp_truncation* raw = nullptr;
    check_model_call(nlkpp_truncation_sweep(m.get(), radii.data(), radii.size(), workers, &raw), "truncation sweep",
                     m.get(), json{{"radii", radii}});
    Truncation tr(raw);
    nlkpp_truncation_info info;
    check(nlkpp_truncation_get_info(tr.get(), &info), "truncation info");
    json levels = json::array();
    std::string csv = "R,A_plus,theta_R,lambda_star,c_star,gap\n";
    for (size_t i = 0; i < info.levels; ++i) {
      nlkpp_truncation_level l;
      check(nlkpp_truncation_get_level(tr.get(), i, &l), "truncation level");
      levels.push_back(json{{"R", num(l.radius)},
                            {"A_plus", num(l.mass_plus)},
                            {"A_minus", num(l.mass_minus)},
                            {"theta_R", num(l.theta_r)},
                            {"lambda_star", num(l.lambda_star)},
                            {"c_star", num(l.c_star)},
                            {"gap", num(l.gap)}});
      csv += fmt17(l.radius) + "," + fmt17(l.mass_plus) + "," + fmt17(l.theta_r) + "," + fmt17(l.lambda_star) + "," +
             fmt17(l.c_star) + "," + fmt17(l.gap) + "\n";
    }
    out.result()["truncation"] = json{{"levels", levels},
                                      {"limit", json{{"lambda_star", num(info.limit_lambda_star)},
                                                     {"c_star", num(info.limit_c_star)}}},
                                      {"lambda1_bound", num(info.lambda1_bound)},
                                      {"strictly_increasing", info.strictly_increasing != 0},
                                      {"above_lambda1", info.above_lambda1 != 0},
                                      {"theta_bounded", info.theta_bounded != 0},
                                      {"dominated", info.dominated != 0},
                                      {"domination_excess", num(info.domination_excess)},
                                      {"domination_samples", info.domination_samples},
                                      {"final_gap", num(info.final_gap)}};
    out.add_csv("truncate_sweep.csv", csv);
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

// ---------------------------------------------------------------- mu-star

int run_mu_star(const Common& c, const std::vector<double>& qs, nlkpp_params p) {
  Output out("mu-star", c);
  try {
    out.parameters() = params_json(p);
    out.parameters()["q"] = qs;
    json rows = json::array();
    std::string csv = "q,mu_star,alpha,bracket_lo,bracket_hi,inside\n";
    for (double q : qs) {
      nlkpp_mu_star r;
      check(nlkpp_mu_star_compute(q, &p, &r), "mu*", json{{"q", num(q)}});
      rows.push_back(json{{"q", num(q)},
                          {"mu_star", num(r.mu_star)},
                          {"alpha", num(r.alpha)},
                          {"bracket", json::array({num(r.bracket_lo), num(r.bracket_hi)})},
                          {"inside_bracket", r.inside_bracket != 0}});
      csv += fmt17(q) + "," + fmt17(r.mu_star) + "," + fmt17(r.alpha) + "," + fmt17(r.bracket_lo) + "," +
             fmt17(r.bracket_hi) + "," + (r.inside_bracket ? "1" : "0") + "\n";
    }
    out.result()["mu_star"] = rows;
    out.add_csv("mu_star.csv", csv);
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::string vary = "mu";
  std::string target = "both";
  double from = 0.0, to = 0.0;
  int count = 0;
  std::vector<double> values;
};

int run_sweep(const Common& c, const SweepOptions& o) {
  Output out("sweep", c);
  try {
    if (c.kernel.empty()) usage("--kernel is required");
    json base;
    try {
      base = json::parse(read_file(c.kernel));
    } catch (const json::exception& e) {
      throw Failure{kExitUsage, "parse-error", c.kernel + ": " + e.what()};
    }
    std::vector<double> values = o.values;
    if (values.empty()) {
      if (o.count < 1) usage("sweep needs --values or --from/--to/--count");
      values = linspace(o.from, o.to, o.count);
    }
    const bool model_param = o.vary == "kappa_plus" || o.vary == "m" || o.vary == "kappa_local" ||
                             o.vary == "kappa_nonlocal";
    if (!model_param && o.target != "a_plus" && o.target != "a_minus" && o.target != "both")
      usage("--target must be a_plus, a_minus or both");
    auto document = [&](double v) {
      json d = base;
      if (model_param) {
        d["params"][o.vary] = v;
        return d;
      }
      if (!d.contains("a_plus")) {
        d[o.vary] = v;  // single kernel document
        return d;
      }
      if (o.target != "a_minus") d["a_plus"][o.vary] = v;
      if (o.target != "a_plus") {
        if (!d.contains("a_minus")) d["a_minus"] = base["a_plus"];
        d["a_minus"][o.vary] = v;
      }
      return d;
    };
    nlkpp_params override_params{};
    bool have_override = false;
    if (!c.params.empty()) {
      if (model_param) usage("--params cannot be combined with sweeping a model parameter");
      Model m0 = load_model(Common{c.kernel, "", "", false});
      check(nlkpp_model_params(m0.get(), &override_params), "reading parameters");
      override_params = parse_params(c.params, override_params);
      have_override = true;
    }
    out.parameters() = json{{"vary", o.vary}, {"target", o.target}, {"values", values}};
    if (have_override) out.parameters()["params"] = params_json(override_params);

    struct Point {
      json row;
      std::string csv;
    };
    std::vector<Point> points(values.size());
    auto evaluate = [&](std::size_t i) {
      const double v = values[i];
      json row{{"index", i}, {"value", num(v)}};
      std::string cls = "", status = "ok";
      double lam = std::nan(""), cs = std::nan("");
      nlkpp_model* raw = nullptr;
      nlkpp_status s = nlkpp_model_parse(document(v).dump().c_str(), &raw);
      Model m(raw);
      if (s == NLKPP_OK && have_override) {
        nlkpp_model* other = nullptr;
        s = nlkpp_model_with_params(m.get(), &override_params, &other);
        m.reset(other);
      }
      nlkpp_dispersion d{};
      if (s == NLKPP_OK) s = nlkpp_minimal_speed(m.get(), &d);
      if (s == NLKPP_OK) {
        cls = d.kernel_class == NLKPP_CLASS_W ? "W" : "V";
        lam = d.lambda_star;
        cs = d.c_star;
        row["class"] = cls;
        row["lambda_star"] = num(lam);
        row["c_star"] = num(cs);
        row["sigma_plus"] = num(d.sigma_plus);
        row["critical_equality"] = d.critical_equality != 0;
      } else {
        status = nlkpp_status_name(s);
        row["error"] = json{{"kind", status}, {"message", nlkpp_last_error()}};
      }
      row["status"] = status;
      points[i] = Point{row, fmt17(v) + "," + cls + "," + fmt17(lam) + "," + fmt17(cs) + "," + status + "\n"};
    };
    const int workers = std::min<int>(worker_count(), static_cast<int>(std::max<std::size_t>(1, values.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i; (i = next++) < values.size();) evaluate(i);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    json rows = json::array();
    std::string csv = "value,class,lambda_star,c_star,status\n";
    std::size_t failed = 0;
    for (const auto& p : points) {
      rows.push_back(p.row);
      csv += p.csv;
      if (p.row["status"] != "ok") ++failed;
    }
    out.result()["sweep"] = json{{"points", rows}, {"failed", failed}};
    out.add_csv("sweep.csv", csv);
    return out.finish(0);
  } catch (const Failure& f) {
    return out.finish(f.code, &f);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Travelling waves of nonlocal KPP equations: dispersion, profiles, evolution and truncation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nlkpp_version()));

  Common common;

  auto* check_cmd = app.add_subcommand("check", "Report the model assumptions Q1-Q7");
  add_common(check_cmd, common);

  SpeedOptions so;
  auto* classify_cmd = app.add_subcommand("classify", "Kernel class (V or W) and the dispersion report");
  add_common(classify_cmd, common);
  auto* speed_cmd = app.add_subcommand("speed", "Minimal speed c*, lambda* and, with --c, the profile abscissa");
  add_common(speed_cmd, common);
  for (auto* sub : {classify_cmd, speed_cmd}) {
    sub->add_option("--lambda-max", so.lambda_max, "Upper end of the CSV lambda grid (default 3 lambda*)");
    sub->add_option("--points", so.points, "Points of the CSV lambda grid")->check(CLI::Range(2, 1000000));
  }
  speed_cmd->add_option("--c", so.c, "Speed for the abscissa and multiplicity");

  ProfileOptions po;
  nlkpp_profile_config_default(&po.cfg);
  auto* profile_cmd = app.add_subcommand("profile", "Solve the travelling-wave profile at speed c");
  add_common(profile_cmd, common);
  auto* unique_cmd = app.add_subcommand("uniqueness", "Solve twice from different anchors and compare up to shift");
  add_common(unique_cmd, common);
  for (auto* sub : {profile_cmd, unique_cmd}) {
    sub->add_option("--c", po.c, "Wave speed")->required();
    sub->add_option("--grid-l", po.cfg.grid_l, "Half-width of the grid (0: 40 / lambda_c)");
    sub->add_option("--grid-h", po.cfg.grid_h, "Grid step (0: min(0.01, 1/(20 lambda_c)))");
    sub->add_option("--tol", po.cfg.tol, "Newton relative residual target");
    sub->add_option("--residual-tol", po.cfg.residual_tol, "Accepted sup residual");
    sub->add_option("--sweep-tol", po.cfg.sweep_tol, "Monotone iteration stopping change");
    sub->add_option("--max-sweeps", po.cfg.max_sweeps, "Monotone iteration sweep cap");
    sub->add_option("--max-newton", po.cfg.max_newton, "Newton step cap");
    sub->add_option("--anchor", po.cfg.anchor, "Anchor s0 of the initial supersolution");
    sub->add_option("--normalize", po.normalize, "Shift normalization: none, half_theta, unit_d");
    sub->add_option("--tail-lo", po.tail_lo, "Smallest profile value in the tail fit window");
    sub->add_option("--tail-hi", po.tail_hi, "Largest profile value in the tail fit window");
  }
  unique_cmd->add_option("--anchor-b", po.anchor_b, "Anchor of the second solve");
  unique_cmd->add_option("--distance-tol", po.unique_tol, "Sup distance counted as equal up to shift");

  EvolveOptions eo;
  nlkpp_evolution_config_default(&eo.cfg);
  auto* evolve_cmd = app.add_subcommand("evolve", "Time-step the equation and measure the front speed");
  add_common(evolve_cmd, common);
  evolve_cmd->add_option("--u0", eo.u0, "Initial data: step, exponential-tail, constant, profile-file");
  evolve_cmd->add_option("--profile-file", eo.profile_file, "s,psi CSV for --u0 profile-file");
  evolve_cmd->add_option("--height", eo.height, "Height of u0 (0: theta)");
  evolve_cmd->add_option("--position", eo.position, "Step or tail position");
  evolve_cmd->add_option("--rate", eo.rate, "Decay rate for exponential-tail");
  evolve_cmd->add_option("--dt", eo.cfg.dt, "Time step");
  evolve_cmd->add_option("--T", eo.cfg.t_end, "Final time");
  evolve_cmd->add_option("--grid-h", eo.cfg.h, "Grid step");
  evolve_cmd->add_option("--x-min", eo.cfg.x_min, "Left end of the initial grid");
  evolve_cmd->add_option("--x-max", eo.cfg.x_max, "Right end of the initial grid");
  evolve_cmd->add_option("--snapshot-interval", eo.cfg.snapshot_interval, "Time between snapshots (0: T/200)");
  bool no_widen = false;
  evolve_cmd->add_flag("--no-widen", no_widen, "Keep the grid fixed");
  evolve_cmd->add_option("--burn-in", eo.burn_in, "Fraction of the horizon skipped by the speed fit");
  evolve_cmd->add_option("--level", eo.level, "Front level (0: theta/2)");
  evolve_cmd->add_flag("--snapshots", eo.snapshots, "Write full snapshots to CSV");

  std::vector<double> radii{2, 5, 10, 20, 40};
  auto* trunc_cmd = app.add_subcommand("truncate-sweep", "Minimal speeds of truncated kernels");
  add_common(trunc_cmd, common);
  trunc_cmd->add_option("--radii", radii, "Increasing truncation radii")->delimiter(',');

  std::vector<double> qs{3.0};
  nlkpp_params mp{2.0, 1.0, 1.0, 0.0};
  auto* mu_cmd = app.add_subcommand("mu-star", "Critical mu of alpha e^{-mu|s|}/(1+|s|^q)");
  add_common(mu_cmd, common, false);
  mu_cmd->add_option("--q", qs, "Exponent(s) q > 1")->delimiter(',');
  mu_cmd->add_option("--kappa-plus", mp.kappa_plus, "Dispersal rate");
  mu_cmd->add_option("--m", mp.m, "Mortality");
  mu_cmd->add_option("--kappa-local", mp.kappa_local, "Local competition");
  mu_cmd->add_option("--kappa-nonlocal", mp.kappa_nonlocal, "Nonlocal competition");

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Class and minimal speed over a range of one parameter");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--vary", sw.vary, "Kernel parameter (e.g. mu, q, rate) or model parameter (kappa_plus, m, ...)");
  sweep_cmd->add_option("--target", sw.target, "Kernel to vary: a_plus, a_minus or both");
  sweep_cmd->add_option("--from", sw.from, "First value");
  sweep_cmd->add_option("--to", sw.to, "Last value");
  sweep_cmd->add_option("--count", sw.count, "Number of values");
  sweep_cmd->add_option("--values", sw.values, "Explicit values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  eo.cfg.widen = no_widen ? 0 : 1;

  try {
    if (check_cmd->parsed()) return run_check(common);
    if (classify_cmd->parsed()) return run_speed("classify", common, so);
    if (speed_cmd->parsed()) return run_speed("speed", common, so);
    if (profile_cmd->parsed()) return run_profile(common, po);
    if (unique_cmd->parsed()) return run_uniqueness(common, po);
    if (evolve_cmd->parsed()) return run_evolve(common, eo);
    if (trunc_cmd->parsed()) return run_truncate(common, radii);
    if (mu_cmd->parsed()) return run_mu_star(common, qs, mp);
    if (sweep_cmd->parsed()) return run_sweep(common, sw);
  } catch (const Failure& f) {
    std::cerr << "nlkpp: " << f.message << "\n";
    return f.code;
  }
  return kExitUsage;
}
