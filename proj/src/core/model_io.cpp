#include "nlkpp/model_io.hpp"

#include <cmath>
#include <fstream>

#include "nlkpp/error.hpp"

namespace nlkpp {
namespace {

using nlohmann::json;

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail(ErrorCode::parse_error, std::string("field \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

double number(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::parse_error, std::string("missing field \"") + key + "\"");
  return number(j, key, 0.0);
}

std::vector<double> numbers(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    fail(ErrorCode::parse_error, std::string("field \"") + key + "\" must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) fail(ErrorCode::parse_error, std::string("field \"") + key + "\" must hold numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

Kernel projected_from_json(const json& j) {
  KernelND nd;
  nd.dim = static_cast<int>(number(j, "dim"));
  const std::string form = j.value("form", "");
  if (form == "gaussian") {
    nd.form = KernelND::Form::gaussian;
    if (j.contains("variances")) {
      nd.variances = numbers(j, "variances");
    } else {
      nd.variances.assign(nd.dim, number(j, "variance", 1.0));
    }
    if (j.contains("means")) nd.means = numbers(j, "means");
  } else if (form == "radial_exponential") {
    nd.form = KernelND::Form::radial_exponential;
    nd.rate = number(j, "rate", 1.0);
  } else if (form == "product") {
    nd.form = KernelND::Form::product;
    if (!j.contains("factors") || !j.at("factors").is_array()) fail(ErrorCode::parse_error, "product: missing factors");
    for (const auto& f : j.at("factors")) nd.factors.push_back(kernel_from_json(f));
  } else if (form == "grid2d") {
    nd.form = KernelND::Form::grid2d;
    const auto& g = j.at("grid");
    nd.grid_start_x = number(g, "start_x");
    nd.grid_start_y = number(g, "start_y");
    nd.grid_step = number(g, "step");
    nd.grid_nx = static_cast<std::size_t>(number(g, "nx"));
    nd.grid_ny = static_cast<std::size_t>(number(g, "ny"));
    nd.grid_values = numbers(g, "values");
  } else {
    fail(ErrorCode::parse_error, "projected: unknown form \"" + form + "\"");
  }
  return project_to_direction(nd, numbers(j, "xi"));
}

}  // namespace

Kernel kernel_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::parse_error, "kernel must be a JSON object");
  if (!j.contains("family") || !j.at("family").is_string()) fail(ErrorCode::parse_error, "kernel needs a \"family\" string");
  const std::string family = j.at("family").get<std::string>();
  Kernel k = [&]() -> Kernel {
    if (family == "laplace") return Kernel::laplace(number(j, "rate", 1.0));
    if (family == "gaussian") return Kernel::gaussian(number(j, "variance", 1.0));
    if (family == "uniform") return Kernel::uniform(number(j, "lo"), number(j, "hi"));
    if (family == "exp_poly") return Kernel::exp_poly(number(j, "p"), number(j, "q"), number(j, "mu"));
    if (family == "radial_exponential")
      return Kernel::radial_exponential(static_cast<int>(number(j, "dim", 1.0)), number(j, "rate", 1.0));
    if (family == "tabulated") {
      if (!j.contains("table")) fail(ErrorCode::parse_error, "tabulated: missing \"table\"");
      const auto& t = j.at("table");
      return Kernel::tabulated(number(t, "grid_start"), number(t, "grid_step"), numbers(t, "values"),
                               j.value("normalize", false));
    }
    if (family == "projected") return projected_from_json(j);
    fail(ErrorCode::parse_error, "unknown kernel family \"" + family + "\"");
  }();
  if (family == "gaussian" && j.contains("mean")) k = k.shifted(number(j, "mean"));
  if (j.contains("shift")) k = k.shifted(number(j, "shift"));
  if (j.contains("truncate_at")) k = k.truncated(number(j, "truncate_at"));
  return k;
}

ModelParams params_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::parse_error, "params must be a JSON object");
  ModelParams p;
  p.kappa_plus = number(j, "kappa_plus");
  p.m = number(j, "m");
  p.kappa_local = number(j, "kappa_local", 0.0);
  p.kappa_nonlocal = number(j, "kappa_nonlocal", 0.0);
  p.validate();
  return p;
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::parse_error, "model document must be a JSON object");
  if (!j.contains("params")) fail(ErrorCode::parse_error, "missing \"params\" block");
  const ModelParams params = params_from_json(j.at("params"));
  const Kernel plus = j.contains("a_plus") ? kernel_from_json(j.at("a_plus")) : kernel_from_json(j);
  const Kernel minus = j.contains("a_minus") ? kernel_from_json(j.at("a_minus")) : plus;
  return ModelSpec{params, KernelPair{plus, minus}};
}

ModelSpec model_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse_error, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, path + ": " + e.what());
  }
  return model_from_json(j);
}

json to_json(const Kernel& kernel) {
  json j;
  j["family"] = kernel.family();
  for (const char* name : {"rate", "variance", "lo", "hi", "p", "q", "mu", "alpha", "dim", "grid_start", "grid_step"}) {
    const double v = kernel.parameter(name);
    if (!std::isnan(v)) j[name] = v;
  }
  if (kernel.shift() != 0.0) j["shift"] = kernel.shift();
  if (kernel.is_truncated()) j["truncate_at"] = kernel.cutoff();
  const double sigma = kernel.abscissa();
  j["abscissa"] = std::isinf(sigma) ? json("inf") : json(sigma);
  j["abscissa_kind"] = to_string(kernel.abscissa_kind());
  return j;
}

json to_json(const ModelParams& p) {
  return json{{"kappa_plus", p.kappa_plus}, {"m", p.m}, {"kappa_local", p.kappa_local}, {"kappa_nonlocal", p.kappa_nonlocal}};
}

json to_json(const AssumptionReport& report) {
  json arr = json::array();
  for (const auto& e : report.entries) {
    json d = std::isnan(e.diagnostic)      ? json(nullptr)
             : std::isfinite(e.diagnostic) ? json(e.diagnostic)
                                           : json(e.diagnostic > 0 ? "inf" : "-inf");
    arr.push_back({{"id", e.id}, {"label", e.label}, {"status", to_string(e.status)}, {"diagnostic", d}, {"detail", e.detail}});
  }
  return arr;
}

}  // namespace nlkpp
