#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "agestruct/error.hpp"
#include "agestruct/reconstruct.hpp"
#include "agestruct/stability.hpp"
#include "agestruct/steady.hpp"
#include "format.hpp"

namespace agestruct::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.json";

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// manifest.json: {"runs": {"<subcommand>": {"files": [...], "seconds": s}}}
void record_run(const fs::path& dir, const std::string& name, const std::vector<std::string>& files,
                double seconds) {
  json manifest = {{"runs", json::object()}};
  if (fs::exists(dir / kManifest)) {
    try {
      manifest = read_json(dir / kManifest);
    } catch (const Error&) {
      manifest = {{"runs", json::object()}};
    }
    if (!manifest.contains("runs") || !manifest["runs"].is_object()) manifest["runs"] = json::object();
  }
  manifest["runs"][name] = {{"files", files}, {"seconds", seconds}};
  write_json(dir / kManifest, manifest);
}

const InitialDensity& need_density(const RunConfig& cfg, std::string_view cmd) {
  if (!cfg.initial_density)
    throw ConfigError(exit_schema, "initial_density: required by " + std::string(cmd));
  return *cfg.initial_density;
}

Trajectory simulate(const RunConfig& cfg, const Feedback& fb) {
  const auto& p0 = need_density(cfg, "this subcommand");
  const StateVector init = density_moments(p0, cfg.params.rho, cfg.params.n());
  return integrate(init, cfg.params, fb, cfg.t_end, cfg.integrator, uniform_times(cfg.t_end, cfg.samples));
}

json complex_list(const std::vector<std::complex<double>>& zs) {
  json arr = json::array();
  for (const auto& z : zs) arr.push_back({{"re", z.real()}, {"im", z.imag()}});
  return arr;
}

json equilibrium_json(const EquilibriumReport& eq) {
  json j = {{"exists", eq.exists},
            {"p_star", eq.exists ? json(eq.p_star) : json(nullptr)},
            {"moments_star", eq.moments_star},
            {"birth_rate_star", eq.birth_rate_star},
            {"residual_inf_norm", eq.residual_inf_norm}};
  return j;
}

json stability_json(const StabilityReport& s, bool trivial) {
  json rows = json::array();
  for (std::size_t r = 0; r < s.jacobian.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < s.jacobian.cols(); ++c) row.push_back(s.jacobian(r, c));
    rows.push_back(row);
  }
  return {{"equilibrium", trivial ? "trivial" : "nontrivial"},
          {"jacobian", rows},
          {"eigenvalues", complex_list(s.eigenvalues)},
          {"spectral_abscissa", s.spectral_abscissa},
          {"trace", s.trace},
          {"verdict", std::string(to_string(s.verdict))}};
}

json assumptions_json(const Feedback& fb) {
  std::vector<double> grid;
  for (int k = 0; k <= 1000; ++k) grid.push_back(0.01 * k);
  const auto report = check_assumptions(fb, grid);
  json j = json::object();
  for (const auto& c : report.clauses) j[c.clause] = c.passed;
  return j;
}

int cmd_steady(const RunConfig& cfg, const Invocation& io, std::vector<std::string>& files) {
  const Feedback fb = cfg.feedback.build();
  const EquilibriumReport eq = equilibrium(cfg.params, fb);
  const StabilityReport st = classify(eq, cfg.params, fb);
  const json assumptions = assumptions_json(fb);

  io.out << "R0 = " << format_double(cfg.params.r0) << '\n';
  if (eq.exists) {
    io.out << "P* = " << format_double(eq.p_star) << '\n';
    io.out << "B* = " << format_double(eq.birth_rate_star) << '\n';
    io.out << "residual = " << format_double(eq.residual_inf_norm) << '\n';
  } else {
    io.out << "no nontrivial equilibrium (R0 <= 1)\n";
  }
  io.out << "spectral abscissa = " << format_double(st.spectral_abscissa) << '\n';
  io.out << "verdict: " << to_string(st.verdict) << (eq.exists ? "" : " (trivial equilibrium)") << '\n';
  for (const auto& [clause, ok] : assumptions.items())
    if (!ok.get<bool>()) io.err << "warning: feedback assumption " << clause << " fails\n";

  json j = equilibrium_json(eq);
  j["r0"] = cfg.params.r0;
  j["verdict"] = std::string(to_string(st.verdict));
  j["stability"] = stability_json(st, !eq.exists);
  j["assumptions"] = assumptions;
  write_json(io.out_dir / "steady.json", j);
  files.push_back("steady.json");
  return exit_ok;
}

int cmd_simulate(const RunConfig& cfg, const Invocation& io, std::vector<std::string>& files) {
  const Feedback fb = cfg.feedback.build();
  const Trajectory traj = simulate(cfg, fb);
  auto out = open_output(io.out_dir / "trajectory.csv");
  out << "t,p";
  for (std::size_t i = 1; i <= cfg.params.n(); ++i) out << ",p" << i;
  out << ",b,psi_int\n";
  std::vector<double> row;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    row.assign({traj.times[k], traj.states[k].p});
    row.insert(row.end(), traj.states[k].moments.begin(), traj.states[k].moments.end());
    row.push_back(traj.birth_rates[k]);
    row.push_back(traj.psi_integral[k]);
    write_row(out, row);
  }
  files.push_back("trajectory.csv");
  io.out << "simulate: " << traj.times.size() << " samples, " << traj.step_count() << " steps, P("
         << format_double(cfg.t_end) << ") = " << format_double(traj.states.back().p) << '\n';
  if (traj.clamp_count > 0) io.err << "warning: " << traj.clamp_count << " small negative values clamped to 0\n";
  return exit_ok;
}

int cmd_reconstruct(const RunConfig& cfg, const Invocation& io, std::vector<std::string>& files) {
  if (!cfg.reconstruction) throw ConfigError(exit_schema, "reconstruction: required by reconstruct");
  const auto& rc = *cfg.reconstruction;
  const Feedback fb = cfg.feedback.build();
  const InitialDensity& p0 = need_density(cfg, "reconstruct");
  const Trajectory traj = simulate(cfg, fb);

  std::vector<double> ages;
  if (rc.age_max) {
    const auto count = static_cast<std::size_t>(std::ceil(*rc.age_max / rc.age_step - 1e-9));
    for (std::size_t k = 0; k <= count; ++k)
      ages.push_back(std::min(*rc.age_max, rc.age_step * static_cast<double>(k)));
  } else {
    ages = default_age_grid(traj, p0, cfg.params, rc.age_step);
  }

  json reports = json::array();
  double worst = 0.0;
  for (double t : rc.times) {
    const DensityField field = reconstruct_density(traj, p0, cfg.params, fb, t, ages);
    const ConsistencyReport rep = consistency_check(field, traj);
    const std::string name = "density_t" + format_double(t) + ".csv";
    auto out = open_output(io.out_dir / name);
    out << "a,p\n";
    for (std::size_t k = 0; k < field.ages.size(); ++k) {
      const double row[] = {field.ages[k], field.values[k]};
      write_row(out, row);
    }
    files.push_back(name);
    json entry = {{"time", t},
                  {"file", name},
                  {"mass_grid", rep.mass_grid},
                  {"tail_mass", rep.tail_mass},
                  {"p_reference", rep.p_reference},
                  {"relative_error", rep.relative_error},
                  {"jump", nullptr}};
    if (field.jump)
      entry["jump"] = {{"age", field.jump->age},
                       {"below", field.jump->below},
                       {"above", field.jump->above},
                       {"size", field.jump->size()}};
    reports.push_back(entry);
    worst = std::max(worst, rep.relative_error);
    io.out << "t = " << format_double(t) << ": mass error " << format_double(rep.relative_error) << '\n';
  }
  write_json(io.out_dir / "reconstruct.json",
             {{"age_grid", {{"step", rc.age_step}, {"max", ages.back()}, {"points", ages.size()}}},
              {"max_relative_error", worst},
              {"fields", reports}});
  files.push_back("reconstruct.json");
  return exit_ok;
}

int cmd_sweep(const RunConfig& cfg, const Invocation& io, std::vector<std::string>& files) {
  if (!cfg.sweep_grid) throw ConfigError(exit_schema, "sweep: required by sweep (no default grid)");
  const auto rows = bifurcation_sweep(cfg.params, cfg.feedback.build(), *cfg.sweep_grid);
  auto out = open_output(io.out_dir / "sweep.csv");
  out << "r0,p_star,exists\n";
  for (const auto& r : rows)
    out << format_double(r.r0) << ',' << (r.p_star ? format_double(*r.p_star) : "") << ','
        << (r.p_star ? 1 : 0) << '\n';
  files.push_back("sweep.csv");
  io.out << "sweep: " << rows.size() << " rows\n";
  return exit_ok;
}

int cmd_validate(const RunConfig& cfg, const Invocation& io, std::vector<std::string>& files) {
  if (!cfg.oracle) throw ConfigError(exit_schema, "oracle: required by validate");
  const auto& oc = *cfg.oracle;
  const InitialDensity& p0 = need_density(cfg, "validate");
  IntegratorSettings integ = cfg.integrator;
  const auto log = [&io](std::size_t k, double u) { io.err << k << ',' << format_double(u) << '\n'; };
  io.err << "iter,update_norm\n";
  const auto report = cross_validate(cfg.params, cfg.feedback.build(), p0, oc.settings, integ, log);

  auto out = open_output(io.out_dir / "oracle.csv");
  out << "t,b,p\n";
  for (std::size_t j = 0; j < report.oracle.times.size(); ++j) {
    const double row[] = {report.oracle.times[j], report.oracle.b[j], report.oracle.p[j]};
    write_row(out, row);
  }
  files.push_back("oracle.csv");

  const bool pass = report.gap_p <= oc.gap_threshold && report.gap_b <= oc.gap_threshold;
  write_json(io.out_dir / "validate.json", {{"gap_p", report.gap_p},
                                            {"gap_b", report.gap_b},
                                            {"gap_threshold", oc.gap_threshold},
                                            {"pass", pass},
                                            {"oracle_iterations", report.oracle_iterations},
                                            {"oracle_final_update", report.oracle_update},
                                            {"t_end", oc.settings.t_end},
                                            {"dt", oc.settings.dt}});
  files.push_back("validate.json");
  io.out << "gap_p = " << format_double(report.gap_p) << ", gap_b = " << format_double(report.gap_b)
         << " (threshold " << format_double(oc.gap_threshold) << "): " << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? exit_ok : exit_threshold;
}

int cmd_report(const RunConfig& cfg, const Invocation& io, std::vector<std::string>& files) {
  const fs::path manifest_path = io.out_dir / kManifest;
  if (!fs::exists(manifest_path)) throw Error("report: no manifest.json in " + io.out_dir.string());
  const json manifest = read_json(manifest_path);

  json listed = json::array();
  json timings = json::object();
  json metrics = json::object();
  for (const auto& [cmd, run] : manifest.at("runs").items()) {
    if (cmd == "report") continue;
    timings[cmd] = run.at("seconds");
    for (const auto& f : run.at("files")) {
      const auto name = f.get<std::string>();
      if (!fs::exists(io.out_dir / name)) throw Error("report: manifest entry " + name + " is missing on disk");
      listed.push_back(name);
    }
  }
  for (const char* name : {"steady", "reconstruct", "validate"}) {
    const fs::path p = io.out_dir / (std::string(name) + ".json");
    const bool in_manifest = std::find(listed.begin(), listed.end(), p.filename().string()) != listed.end();
    if (in_manifest) metrics[name] = read_json(p);
  }

  const Feedback fb = cfg.feedback.build();
  const EquilibriumReport eq = equilibrium(cfg.params, fb);
  const StabilityReport st = classify(eq, cfg.params, fb);
  listed.push_back("summary.json");
  listed.push_back(kManifest);
  const json summary = {{"config", cfg.to_json()},
                        {"equilibrium", equilibrium_json(eq)},
                        {"stability", stability_json(st, !eq.exists)},
                        {"metrics", metrics},
                        {"manifest", listed},
                        {"timings", timings}};
  write_json(io.out_dir / "summary.json", summary);
  files.push_back("summary.json");
  io.out << "report: " << listed.size() << " files\n";
  return exit_ok;
}

}  // namespace

fs::path resolve_output_dir(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("AGESTRUCT_OUTDIR"); env && *env) return env;
  if (cfg.output_dir) return *cfg.output_dir;
  return ".";
}

int run_subcommand(std::string_view name, const RunConfig& cfg, const Invocation& io) {
  using Handler = int (*)(const RunConfig&, const Invocation&, std::vector<std::string>&);
  Handler handler = nullptr;
  if (name == "steady") handler = cmd_steady;
  else if (name == "simulate") handler = cmd_simulate;
  else if (name == "reconstruct") handler = cmd_reconstruct;
  else if (name == "sweep") handler = cmd_sweep;
  else if (name == "validate") handler = cmd_validate;
  else if (name == "report") handler = cmd_report;
  else throw ConfigError(exit_schema, "unknown subcommand " + std::string(name));

  std::error_code ec;
  fs::create_directories(io.out_dir, ec);
  if (ec) throw Error("cannot create " + io.out_dir.string() + ": " + ec.message());

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> files;
  const int code = handler(cfg, io, files);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (name != "report") record_run(io.out_dir, std::string(name), files, seconds);
  return code;
}

}  // namespace agestruct::app
