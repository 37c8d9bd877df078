#include "fcm/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <ostream>
#include <sstream>

#include "fcm/designs.hpp"
#include "fcm/downsample.hpp"
#include "fcm/error.hpp"
#include "fcm/experiments.hpp"
#include "fcm/io.hpp"

namespace fcm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error invalid(const std::string& message) { return Error(ErrorCode::invalid_argument, message); }

void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw invalid(std::string(flag) + " is required");
}

void in_range(double v, double lo, double hi, bool hi_inclusive, const char* flag) {
  if (!std::isfinite(v) || !(v > lo) || (hi_inclusive ? v > hi : v >= hi)) {
    throw invalid(std::string(flag) + " must lie in (" + io::format_double(lo) + ", " + io::format_double(hi) +
                  (hi_inclusive ? "]" : ")"));
  }
}

fs::path normalized(const fs::path& p) {
  std::error_code ec;
  auto abs = fs::weakly_canonical(p, ec);
  return ec ? fs::absolute(p).lexically_normal() : abs;
}

json error_json(const std::exception& e) {
  json j = {{"error", "internal"}, {"message", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) j["error"] = to_string(err->code());
  if (const auto* ns = dynamic_cast<const NearSingular*>(&e)) {
    j["min_eigenvalue"] = ns->min_eigenvalue();
    j["max_eigenvalue"] = ns->max_eigenvalue();
    j["hint"] = "run diagnose, or refit with --allow-rank-deficient for the minimum-norm solution";
  }
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
    j["source"] = pe->source();
    j["line"] = pe->line() ? json(*pe->line()) : json(nullptr);
    j["field"] = pe->field();
  }
  return j;
}

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (err == nullptr) return exit_io;
  switch (err->code()) {
    case ErrorCode::near_singular: return exit_near_singular;
    case ErrorCode::io: return exit_io;
    default: return exit_validation;
  }
}

json read_json(const fs::path& path) {
  const std::string text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = text.substr(0, std::min<std::size_t>(e.byte, text.size()));
    throw ParseError(path.string(), 1 + static_cast<std::size_t>(std::count(upto.begin(), upto.end(), '\n')), "",
                     "invalid JSON");
  }
}

int do_simulate(const RunConfig& c, std::ostream& out) {
  auto spec = io::parse_simulation_spec(read_json(c.spec), c.spec.string());
  if (c.seed) spec.seed = *c.seed;
  const auto sim = io::simulate(spec);
  const fs::path manifest = io::write_design(sim.design, c.out);
  const json truth = {{"format_version", io::format_version},
                      {"spec", io::simulation_spec_json(spec)},
                      {"coefficients", io::coefficients_json(sim.truth)}};
  io::write_text_atomic(c.out / "truth.json", io::dump(truth));
  out << json{{"manifest", manifest.string()}, {"truth", (c.out / "truth.json").string()},
              {"observations", sim.design.n()}}.dump()
      << "\n";
  return exit_ok;
}

int do_fit(const RunConfig& c, std::ostream& out) {
  const Design design = io::read_manifest(c.design);
  FitOptions opts;
  opts.solver = c.solver;
  opts.lambda = c.lambda;
  opts.pivot_tol = c.pivot_tol;
  opts.svd_rel_tol = c.svd_tol;
  opts.allow_rank_deficient = c.allow_rank_deficient;
  const FitResult result = fit(design, opts);
  json j = io::fit_json(result);
  if (!c.truth.empty()) {
    const json t = read_json(c.truth);
    const auto it = t.find("coefficients");
    if (it == t.end()) throw ParseError(c.truth.string(), std::nullopt, "/coefficients", "missing field");
    const auto truth = io::coefficients_from_json(*it, c.truth.string());
    check_conformal(design, truth);
    j["relative_error"] = relative_l2_error(result.coef, truth);
  }
  if (!c.spectrum_csv.empty()) {
    io::write_text_atomic(c.spectrum_csv, io::spectrum_csv(gram_spectrum(assemble(design), c.tol).eigenvalues));
  }
  io::write_text_atomic(c.out, io::dump(j));
  json summary = {{"solver", j["solver"]}, {"sse", j["sse"]}, {"truncation_rank", j["truncation_rank"]}};
  if (j.contains("relative_error")) summary["relative_error"] = j["relative_error"];
  out << summary.dump() << "\n";
  return exit_ok;
}

int do_diagnose(const RunConfig& c, std::ostream& out) {
  const Design design = io::read_manifest(c.design);
  DiagnoseOptions opts;
  opts.spectrum_tol = c.tol;
  opts.residual_tol = c.residual_tol;
  opts.cluster_tol = c.cluster_tol;
  opts.stride = c.stride;
  const Diagnosis d = diagnose(design, opts);
  const json j = io::diagnosis_json(d);
  if (!c.spectrum_csv.empty()) io::write_text_atomic(c.spectrum_csv, io::spectrum_csv(d.spectrum.eigenvalues));
  if (!c.residual_csv.empty()) io::write_text_atomic(c.residual_csv, io::residual_csv(d));
  io::write_text_atomic(c.out, io::dump(j));
  out << json{{"verdict", j["verdict"]}, {"numerical_rank", d.spectrum.numerical_rank},
              {"block_size", d.spectrum.block_size}}.dump()
      << "\n";
  return exit_ok;
}

int do_downsample(const RunConfig& c, std::ostream& out) {
  const Design design = io::read_manifest(c.design);
  const FlmDataset data = to_flm(design, c.U);
  io::write_text_atomic(c.out, io::flm_csv(data));
  json summary = {{"rows", data.rows.size()}, {"U", data.U}, {"counts", data.counts}};
  if (!c.fit_out.empty()) {
    const auto coef = fit_flm(data, c.lambda, c.pivot_tol);
    io::write_text_atomic(c.fit_out, io::dump({{"format_version", io::format_version},
                                               {"U", data.U},
                                               {"lambda", c.lambda},
                                               {"coefficients", io::coefficients_json(coef)}}));
  }
  out << summary.dump() << "\n";
  return exit_ok;
}

int do_reproduce(const RunConfig& c, std::ostream& out) {
  if (c.list) {
    for (const auto& e : experiments()) out << e.criterion << "\t" << e.name << "\t" << e.summary << "\n";
    return exit_ok;
  }
  std::vector<std::string> names;
  if (c.name == "all") {
    for (const auto& e : experiments()) names.push_back(e.name);
  } else {
    find_experiment(c.name);
    names.push_back(c.name);
  }
  bool ok = true;
  json results = json::array();
  for (const auto& name : names) {
    const auto r = run_experiment(name, c.seed);
    out << format_result(r);
    out.flush();
    ok = ok && r.passed();
    results.push_back(r.to_json());
  }
  if (!c.out.empty()) io::write_text_atomic(c.out, io::dump(results.size() == 1 ? results[0] : results));
  return ok ? exit_ok : exit_check_failed;
}

// Reads a JSON object as CLI11 configuration. Nested objects are sections
// named after subcommands; top-level scalars apply to the selected command.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) j[name] = opt->as<std::string>();
      else if (default_also && !opt->get_default_str().empty()) j[name] = opt->get_default_str();
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<std::string> command;
    for (const CLI::App* sub : app_->get_subcommands()) command.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        for (const auto& [k, v] : value.items()) items.push_back(item({key}, k, v));
      } else {
        items.push_back(item(command, key, value));
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem item(std::vector<std::string> parents, std::string name, const json& v) {
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = std::move(name);
    auto scalar = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    if (v.is_array()) {
      for (const auto& x : v) it.inputs.push_back(scalar(x));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }

  const CLI::App* app_;
};

}  // namespace

void validate(const RunConfig& c) {
  switch (c.command) {
    case Command::simulate:
      require_path(c.spec, "--spec");
      require_path(c.out, "--out");
      break;
    case Command::fit:
    case Command::diagnose:
    case Command::downsample:
      require_path(c.design, "--design");
      require_path(c.out, "--out");
      break;
    case Command::reproduce:
      if (c.name.empty() && !c.list) throw invalid("reproduce needs --name or --list");
      break;
  }
  if (!std::isfinite(c.lambda) || c.lambda < 0.0) throw invalid("--lambda must be finite and non-negative");
  in_range(c.pivot_tol, 0.0, 1.0, false, "--pivot-tol");
  in_range(c.svd_tol, 0.0, 1.0, true, "--svd-tol");
  in_range(c.tol, 0.0, 1.0, false, "--tol");
  in_range(c.residual_tol, 0.0, 1.0, false, "--residual-tol");
  in_range(c.cluster_tol, 0.0, 1.0, false, "--cluster-tol");
  if (c.stride == 0) throw invalid("--stride must be at least 1");
  if (c.command == Command::downsample && !(std::isfinite(c.U) && c.U > 0.0)) throw invalid("--U must be positive");

  std::vector<std::pair<const char*, fs::path>> inputs = {{"--spec", c.spec}, {"--design", c.design}, {"--truth", c.truth}};
  std::vector<std::pair<const char*, fs::path>> outputs = {
      {"--out", c.out}, {"--spectrum-csv", c.spectrum_csv}, {"--residual-csv", c.residual_csv}, {"--fit-out", c.fit_out}};
  for (std::size_t a = 0; a < outputs.size(); ++a) {
    if (outputs[a].second.empty()) continue;
    const auto pa = normalized(outputs[a].second);
    for (const auto& [flag, p] : inputs) {
      if (!p.empty() && normalized(p) == pa) {
        throw invalid(std::string(outputs[a].first) + " must differ from " + flag);
      }
    }
    for (std::size_t b = a + 1; b < outputs.size(); ++b) {
      if (!outputs[b].second.empty() && normalized(outputs[b].second) == pa) {
        throw invalid(std::string(outputs[a].first) + " must differ from " + outputs[b].first);
      }
    }
  }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    switch (config.command) {
      case Command::simulate: return do_simulate(config, out);
      case Command::fit: return do_fit(config, out);
      case Command::diagnose: return do_diagnose(config, out);
      case Command::downsample: return do_downsample(config, out);
      case Command::reproduce: return do_reproduce(config, out);
    }
  } catch (const std::exception& e) {
    err << error_json(e).dump() << "\n";
    return exit_code_for(e);
  }
  return exit_ok;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimation and identifiability diagnostics for the functional convolution model", "fcmlab"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig c;
  std::string solver = "direct";
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic design, its CSV curves and truth.json");
  sim->add_option("--spec", c.spec, "Simulation spec (JSON)");
  sim->add_option("--out", c.out, "Output directory");
  auto* sim_seed = sim->add_option("--seed", seed, "Override the spec seed");

  auto* fitc = app.add_subcommand("fit", "Least-squares fit of a design manifest");
  fitc->add_option("--design", c.design, "Design manifest (JSON)");
  fitc->add_option("--solver", solver, "direct, svd or ridge")
      ->check(CLI::IsMember({"direct", "svd", "truncated_svd", "ridge"}));
  fitc->add_option("--lambda", c.lambda, "Second-difference penalty weight for ridge");
  fitc->add_option("--pivot-tol", c.pivot_tol, "Relative eigenvalue floor for the direct solve");
  fitc->add_option("--svd-tol", c.svd_tol, "Relative truncation level for the SVD solve");
  fitc->add_flag("--allow-rank-deficient", c.allow_rank_deficient,
                 "Fall back to the minimum-norm solution when the direct solve is near singular");
  fitc->add_option("--truth", c.truth, "truth.json from simulate; adds relative_error to the output");
  fitc->add_option("--spectrum-csv", c.spectrum_csv, "Write the Gram spectrum as index,sigma");
  fitc->add_option("--tol", c.tol, "Spectrum tolerance for --spectrum-csv");
  fitc->add_option("--out", c.out, "Fit result (JSON)");

  auto* diag = app.add_subcommand("diagnose", "Gram spectrum and self-similarity report");
  diag->add_option("--design", c.design, "Design manifest (JSON)");
  diag->add_option("--tol", c.tol, "Relative eigenvalue tolerance for the Gram rank");
  diag->add_option("--residual-tol", c.residual_tol, "Self-similarity residual threshold");
  diag->add_option("--cluster-tol", c.cluster_tol, "Relative distance for merging recurrence roots");
  diag->add_option("--stride", c.stride, "Row stride of the delay embedding");
  diag->add_option("--spectrum-csv", c.spectrum_csv, "Write the Gram spectrum as index,sigma");
  diag->add_option("--residual-csv", c.residual_csv, "Write residual-vs-K curves");
  diag->add_option("--out", c.out, "Diagnosis (JSON)");

  auto* down = app.add_subcommand("downsample", "Export the down-sampled functional linear model");
  down->add_option("--design", c.design, "Design manifest (JSON)");
  down->add_option("--U", c.U, "Sampling interval, a multiple of the grid step");
  down->add_option("--out", c.out, "FLM rows (CSV)");
  down->add_option("--fit-out", c.fit_out, "Also fit the FLM and write its coefficients (JSON)");
  down->add_option("--lambda", c.lambda, "Penalty weight for --fit-out");
  down->add_option("--pivot-tol", c.pivot_tol, "Relative eigenvalue floor for --fit-out");

  auto* repro = app.add_subcommand("reproduce", "Run a named acceptance experiment");
  repro->add_option("--name", c.name, "Experiment name, or all");
  repro->add_flag("--list", c.list, "List the experiments");
  auto* repro_seed = repro->add_option("--seed", seed, "Override the embedded seed");
  repro->add_option("--out", c.out, "Write the result (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return exit_validation;
  }

  if (sim->parsed()) c.command = Command::simulate;
  else if (fitc->parsed()) c.command = Command::fit;
  else if (diag->parsed()) c.command = Command::diagnose;
  else if (down->parsed()) c.command = Command::downsample;
  else c.command = Command::reproduce;
  c.solver = parse_solver(solver);
  if (sim_seed->count() > 0 || repro_seed->count() > 0) c.seed = seed;
  return run(c, out, err);
}

}  // namespace fcm::cli
