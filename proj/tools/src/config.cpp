#include "config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "agestruct/error.hpp"

namespace agestruct::app {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& msg) { throw ConfigError(exit_schema, msg); }
[[noreturn]] void invariant(const std::string& msg) { throw ConfigError(exit_invariant, msg); }

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string indexed(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// A JSON object with a closed key set. Every lookup is path-qualified.
class Section {
 public:
  Section(const json& node, std::string path, std::initializer_list<const char*> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) schema(label() + ": expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : node_.items())
      if (!keys.contains(item.key())) schema(join(path_, item.key()) + ": unknown key");
  }

  const std::string& path() const { return path_; }
  bool has(const char* key) const { return node_.contains(key); }
  const json& raw(const char* key) const { return node_.at(key); }
  std::string at(const char* key) const { return join(path_, key); }

  double number(const char* key) const {
    if (!has(key)) schema(at(key) + ": required");
    return as_number(node_.at(key), at(key));
  }
  double number(const char* key, double fallback) const {
    return has(key) ? as_number(node_.at(key), at(key)) : fallback;
  }
  std::optional<double> optional_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return as_number(node_.at(key), at(key));
  }
  long long integer(const char* key, long long fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) schema(at(key) + ": expected an integer");
    return v.get<long long>();
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) schema(at(key) + ": expected a boolean");
    return v.get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) schema(at(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const char* key) const {
    if (!has(key)) schema(at(key) + ": required");
    const json& v = node_.at(key);
    if (!v.is_array()) schema(at(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], indexed(at(key), i)));
    return out;
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) schema(where + ": expected a number");
    return v.get<double>();
  }

  const json& node_;
  std::string path_;
};

void require_positive(double v, const std::string& where) {
  if (!(v > 0.0) || !std::isfinite(v)) invariant(where + ": must be positive");
}

void parse_model(const Section& root, RunConfig& cfg) {
  if (!root.has("model")) schema("model: required");
  const Section s(root.raw("model"), "model", {"betas", "rho", "mu0", "r0", "normalize_betas"});
  cfg.input_betas = s.numbers("betas");
  const double rho = s.number("rho");
  const double mu0 = s.number("mu0");
  const double r0 = s.number("r0");
  cfg.normalize_betas = s.boolean("normalize_betas", false);

  if (cfg.input_betas.empty()) invariant("model.betas: need at least one coefficient");
  for (std::size_t i = 0; i < cfg.input_betas.size(); ++i)
    require_positive(cfg.input_betas[i], indexed("model.betas", i));
  require_positive(rho, "model.rho");
  require_positive(mu0, "model.mu0");
  require_positive(r0, "model.r0");

  ModelParams p{cfg.input_betas, rho, mu0, r0, false};
  cfg.params = cfg.normalize_betas ? with_normalized_betas(p) : p;
}

void parse_feedback(const Section& root, RunConfig& cfg) {
  if (!root.has("feedback")) schema("feedback: required");
  const Section s(root.raw("feedback"), "feedback", {"linear_mode", "phi", "psi"});
  cfg.feedback.linear_mode = s.boolean("linear_mode", false);
  if (!cfg.feedback.linear_mode && (!s.has("phi") || !s.has("psi")))
    schema("feedback: phi and psi are required unless linear_mode is true");

  if (s.has("phi")) {
    const Section phi(s.raw("phi"), "feedback.phi", {"family", "k", "m"});
    const std::string family = phi.string("family", "hill");
    const double k = phi.number("k", 1.0);
    require_positive(k, phi.at("k"));
    if (family == "exponential") {
      if (phi.has("m")) schema(phi.at("m") + ": only used by the hill family");
      cfg.feedback.phi = PhiSpec::exponential(k);
    } else if (family == "hill") {
      const double m = phi.number("m", 1.0);
      if (!(m >= 1.0) || !std::isfinite(m)) invariant(phi.at("m") + ": must be >= 1");
      cfg.feedback.phi = PhiSpec::hill(k, m);
    } else {
      schema(phi.at("family") + ": expected \"exponential\" or \"hill\"");
    }
  }
  if (s.has("psi")) {
    const Section psi(s.raw("psi"), "feedback.psi", {"family", "c", "gamma"});
    const std::string family = psi.string("family", "linear");
    const double c = psi.number("c", 1.0);
    require_positive(c, psi.at("c"));
    if (family == "linear") {
      if (psi.has("gamma")) schema(psi.at("gamma") + ": only used by the power family");
      cfg.feedback.psi = PsiSpec::linear(c);
    } else if (family == "power") {
      const double gamma = psi.number("gamma", 1.0);
      if (!(gamma >= 1.0) || !std::isfinite(gamma)) invariant(psi.at("gamma") + ": must be >= 1");
      cfg.feedback.psi = PsiSpec::power(c, gamma);
    } else {
      schema(psi.at("family") + ": expected \"linear\" or \"power\"");
    }
  }
}

void parse_density(const Section& root, RunConfig& cfg) {
  if (!root.has("initial_density")) return;
  const Section s(root.raw("initial_density"), "initial_density", {"kind", "c", "lambda", "ages", "values"});
  const std::string kind = s.string("kind", "exponential");
  if (kind == "exponential") {
    if (s.has("ages") || s.has("values")) schema("initial_density: ages/values belong to kind \"tabulated\"");
    const double c = s.number("c");
    const double lambda = s.number("lambda");
    if (!(c >= 0.0) || !std::isfinite(c)) invariant("initial_density.c: must be nonnegative");
    require_positive(lambda, "initial_density.lambda");
    cfg.initial_density = InitialDensity::exponential(c, lambda);
  } else if (kind == "tabulated") {
    if (s.has("c") || s.has("lambda")) schema("initial_density: c/lambda belong to kind \"exponential\"");
    auto ages = s.numbers("ages");
    auto values = s.numbers("values");
    try {
      cfg.initial_density = InitialDensity::tabulated(std::move(ages), std::move(values));
    } catch (const DomainError& e) {
      invariant(e.what());
    }
  } else {
    schema("initial_density.kind: expected \"exponential\" or \"tabulated\"");
  }
}

void parse_integrator(const Section& root, RunConfig& cfg) {
  if (!root.has("integrator")) return;
  const Section s(root.raw("integrator"), "integrator", {"method", "h", "rtol", "atol", "t_end", "samples"});
  const std::string method = s.string("method", "rk45");
  if (method == "rk4") cfg.integrator.method = IntegratorSettings::Method::rk4;
  else if (method == "rk45") cfg.integrator.method = IntegratorSettings::Method::rk45;
  else schema(s.at("method") + ": expected \"rk4\" or \"rk45\"");
  cfg.integrator.h = s.number("h", cfg.integrator.h);
  cfg.integrator.rtol = s.number("rtol", cfg.integrator.rtol);
  cfg.integrator.atol = s.number("atol", cfg.integrator.atol);
  cfg.t_end = s.number("t_end", cfg.t_end);
  const long long samples = s.integer("samples", static_cast<long long>(cfg.samples));
  require_positive(cfg.integrator.h, s.at("h"));
  require_positive(cfg.integrator.rtol, s.at("rtol"));
  require_positive(cfg.integrator.atol, s.at("atol"));
  require_positive(cfg.t_end, s.at("t_end"));
  if (samples < 2) invariant(s.at("samples") + ": must be at least 2");
  cfg.samples = static_cast<std::size_t>(samples);
}

void parse_reconstruction(const Section& root, RunConfig& cfg) {
  if (!root.has("reconstruction")) return;
  const Section s(root.raw("reconstruction"), "reconstruction", {"times", "age_step", "age_max"});
  ReconstructionConfig rc;
  rc.times = s.numbers("times");
  rc.age_step = s.number("age_step", rc.age_step);
  rc.age_max = s.optional_number("age_max");
  if (rc.times.empty()) invariant("reconstruction.times: need at least one time");
  for (std::size_t i = 0; i < rc.times.size(); ++i) {
    const double t = rc.times[i];
    if (!(t >= 0.0) || !(t <= cfg.t_end))
      invariant(indexed("reconstruction.times", i) + ": must lie in [0, integrator.t_end]");
  }
  require_positive(rc.age_step, s.at("age_step"));
  if (rc.age_max) require_positive(*rc.age_max, s.at("age_max"));
  cfg.reconstruction = std::move(rc);
}

void parse_oracle(const Section& root, RunConfig& cfg) {
  if (!root.has("oracle")) return;
  const Section s(root.raw("oracle"), "oracle", {"t_end", "dt", "tol", "k_max", "gap_threshold"});
  OracleConfig oc;
  oc.settings.t_end = s.number("t_end", oc.settings.t_end);
  oc.settings.dt = s.number("dt", oc.settings.dt);
  oc.settings.tol = s.number("tol", oc.settings.tol);
  const long long k_max = s.integer("k_max", static_cast<long long>(oc.settings.k_max));
  oc.gap_threshold = s.number("gap_threshold", oc.gap_threshold);
  require_positive(oc.settings.t_end, s.at("t_end"));
  require_positive(oc.settings.dt, s.at("dt"));
  require_positive(oc.settings.tol, s.at("tol"));
  require_positive(oc.gap_threshold, s.at("gap_threshold"));
  if (k_max < 1) invariant(s.at("k_max") + ": must be at least 1");
  oc.settings.k_max = static_cast<std::size_t>(k_max);
  if (oc.settings.t_end >= oc.settings.dt) {
    const double ratio = oc.settings.t_end / oc.settings.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) invariant(s.at("dt") + ": must divide oracle.t_end");
  }
  cfg.oracle = oc;
}

void parse_sweep(const Section& root, RunConfig& cfg) {
  if (!root.has("sweep")) return;
  const Section s(root.raw("sweep"), "sweep", {"r0_grid"});
  auto grid = s.numbers("r0_grid");
  if (grid.empty()) invariant("sweep.r0_grid: need at least one value");
  for (std::size_t i = 0; i < grid.size(); ++i) require_positive(grid[i], indexed("sweep.r0_grid", i));
  cfg.sweep_grid = std::move(grid);
}

json density_json(const InitialDensity& d) {
  if (d.kind() == InitialDensity::Kind::exponential)
    return {{"kind", "exponential"}, {"c", d.c()}, {"lambda", d.lambda()}};
  return {{"kind", "tabulated"}, {"ages", d.ages()}, {"values", d.values()}};
}

}  // namespace

RunConfig parse_config(const json& doc) {
  const Section root(doc, "",
                     {"model", "feedback", "initial_density", "integrator", "reconstruction", "oracle",
                      "sweep", "output_dir"});
  RunConfig cfg;
  parse_model(root, cfg);
  parse_feedback(root, cfg);
  parse_density(root, cfg);
  parse_integrator(root, cfg);
  parse_reconstruction(root, cfg);
  parse_oracle(root, cfg);
  parse_sweep(root, cfg);
  if (root.has("output_dir")) cfg.output_dir = root.string("output_dir", ".");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) schema(path.string() + ": cannot open");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    schema(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json RunConfig::to_json() const {
  json j;
  j["model"] = {{"betas", input_betas},
                {"rho", params.rho},
                {"mu0", params.mu0},
                {"r0", params.r0},
                {"normalize_betas", normalize_betas}};
  if (normalize_betas) j["model"]["normalized_betas"] = params.betas;

  json fb = {{"linear_mode", feedback.linear_mode}};
  if (!feedback.linear_mode) {
    const auto& phi = feedback.phi;
    fb["phi"] = phi.family == PhiSpec::Family::exponential
                    ? json{{"family", "exponential"}, {"k", phi.k}}
                    : json{{"family", "hill"}, {"k", phi.k}, {"m", phi.m}};
    const auto& psi = feedback.psi;
    fb["psi"] = psi.family == PsiSpec::Family::linear
                    ? json{{"family", "linear"}, {"c", psi.c}}
                    : json{{"family", "power"}, {"c", psi.c}, {"gamma", psi.gamma}};
  }
  j["feedback"] = fb;

  if (initial_density) j["initial_density"] = density_json(*initial_density);
  j["integrator"] = {{"method", integrator.method == IntegratorSettings::Method::rk4 ? "rk4" : "rk45"},
                     {"h", integrator.h},
                     {"rtol", integrator.rtol},
                     {"atol", integrator.atol},
                     {"t_end", t_end},
                     {"samples", samples}};
  if (reconstruction) {
    j["reconstruction"] = {{"times", reconstruction->times}, {"age_step", reconstruction->age_step}};
    if (reconstruction->age_max) j["reconstruction"]["age_max"] = *reconstruction->age_max;
  }
  if (oracle)
    j["oracle"] = {{"t_end", oracle->settings.t_end},
                   {"dt", oracle->settings.dt},
                   {"tol", oracle->settings.tol},
                   {"k_max", oracle->settings.k_max},
                   {"gap_threshold", oracle->gap_threshold}};
  if (sweep_grid) j["sweep"] = {{"r0_grid", *sweep_grid}};
  if (output_dir) j["output_dir"] = *output_dir;
  return j;
}

}  // namespace agestruct::app
