#include "fcm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fcm/error.hpp"

namespace fcm::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Parses "t,value" rows; returns the times and values with their line numbers.
struct CsvColumns {
  std::vector<double> t, v;
  std::vector<std::size_t> lines;
};

CsvColumns parse_columns(std::string_view text, const std::string& source) {
  CsvColumns out;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!header) {
      if (line != "t,value") throw ParseError(source, line_no, "header", "expected header 't,value'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError(source, line_no, "row", "expected exactly two fields");
    }
    double t = 0.0;
    double v = 0.0;
    if (!parse_number(line.substr(0, comma), t) || !std::isfinite(t)) {
      throw ParseError(source, line_no, "t", "not a finite number");
    }
    if (!parse_number(line.substr(comma + 1), v) || !std::isfinite(v)) {
      throw ParseError(source, line_no, "value", "not a finite number");
    }
    out.t.push_back(t);
    out.v.push_back(v);
    out.lines.push_back(line_no);
    if (end == text.size()) break;
  }
  if (!header) throw ParseError(source, std::nullopt, "header", "empty file");
  if (out.t.empty()) throw ParseError(source, std::nullopt, "row", "no samples");
  return out;
}

GridFunction build_grid(CsvColumns cols, const std::string& source, std::optional<double> step) {
  const std::size_t n = cols.t.size();
  double h = 0.0;
  if (step) {
    h = *step;
  } else {
    if (n < 2) throw ParseError(source, cols.lines.front(), "t", "cannot infer the step from one sample");
    h = (cols.t.back() - cols.t.front()) / static_cast<double>(n - 1);
  }
  if (!(h > 0.0)) throw ParseError(source, cols.lines.size() > 1 ? cols.lines[1] : cols.lines[0], "t",
                                   "times must be strictly increasing");
  for (std::size_t m = 1; m < n; ++m) {
    const double expected = cols.t.front() + static_cast<double>(m) * h;
    if (!(cols.t[m] > cols.t[m - 1]) || std::abs(cols.t[m] - expected) > 1e-9 * h) {
      throw ParseError(source, cols.lines[m], "t", "non-uniform spacing (expected t = " +
                                                     format_double(expected) + ")");
    }
  }
  return GridFunction(cols.t.front(), h, std::move(cols.v));
}

GridFunction parse_grid_csv(std::string_view text, const std::string& source, std::optional<double> step) {
  return build_grid(parse_columns(text, source), source, step);
}

}  // namespace

GridFunction parse_grid_csv(std::string_view text, const std::string& source) {
  return parse_grid_csv(text, source, std::nullopt);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io, "cannot read '" + path.string() + "'");
  return ss.str();
}

GridFunction read_grid_csv(const fs::path& path) { return parse_grid_csv(read_text(path), path.string()); }

std::string grid_csv(const GridFunction& f) {
  std::string out = "t,value\n";
  for (std::size_t m = 0; m < f.size(); ++m) {
    out += format_double(f.t(m));
    out += ',';
    out += format_double(f[m]);
    out += '\n';
  }
  return out;
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + tmp.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::io, "cannot move output into place at '" + path.string() + "'");
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

namespace {

// Field access with the JSON pointer of the offending field in errors.
const json& field(const json& obj, const std::string& key, const std::string& source, const std::string& where) {
  if (!obj.is_object()) throw ParseError(source, std::nullopt, where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, std::nullopt, where + "/" + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& source, const std::string& where) {
  if (!j.is_number()) throw ParseError(source, std::nullopt, where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(source, std::nullopt, where, "expected a finite number");
  return v;
}

std::uint64_t unsigned_integer(const json& j, const std::string& source, const std::string& where) {
  if (!j.is_number_unsigned()) throw ParseError(source, std::nullopt, where, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::string text_field(const json& j, const std::string& source, const std::string& where) {
  if (!j.is_string()) throw ParseError(source, std::nullopt, where, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& source, const std::string& where) {
  if (!j.is_array()) throw ParseError(source, std::nullopt, where, "expected an array");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], source, where + "/" + std::to_string(k)));
  return out;
}

double opt_number(const json& obj, const std::string& key, double fallback, const std::string& source,
                  const std::string& where) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, source, where + "/" + key);
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte ? byte - 1 : 0), '\n'));
    throw ParseError(source, line, "", "invalid JSON");
  }
}

void check_version(const json& j, const std::string& source) {
  const auto& v = field(j, "format_version", source, "");
  if (!v.is_number_integer() || v.get<int>() != format_version) {
    throw ParseError(source, std::nullopt, "/format_version", "unsupported format version");
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json coefficients_json(const CoefficientSet& coef) {
  json betas = json::array();
  for (const auto& b : coef.betas) {
    betas.push_back({{"lag", b.length()}, {"step", b.step()}, {"values", std::vector<double>(b.values().begin(), b.values().end())}});
  }
  return {{"beta0", coef.beta0}, {"betas", betas}};
}

CoefficientSet coefficients_from_json(const json& j, const std::string& source) {
  CoefficientSet out;
  out.beta0 = numbers(field(j, "beta0", source, ""), source, "/beta0");
  const auto& betas = field(j, "betas", source, "");
  if (!betas.is_array()) throw ParseError(source, std::nullopt, "/betas", "expected an array");
  for (std::size_t k = 0; k < betas.size(); ++k) {
    const std::string where = "/betas/" + std::to_string(k);
    const double step = number(field(betas[k], "step", source, where), source, where + "/step");
    auto values = numbers(field(betas[k], "values", source, where), source, where + "/values");
    if (!(step > 0.0) || values.empty()) throw ParseError(source, std::nullopt, where, "invalid kernel grid");
    out.betas.emplace_back(0.0, step, std::move(values));
  }
  return out;
}

Design read_manifest(const fs::path& path) {
  const std::string source = path.string();
  const json j = parse_json(read_text(path), source);
  check_version(j, source);
  const double step = number(field(j, "step", source, ""), source, "/step");
  if (!(step > 0.0)) throw ParseError(source, std::nullopt, "/step", "step must be positive");
  auto lags = numbers(field(j, "lags", source, ""), source, "/lags");
  const auto& obs = field(j, "observations", source, "");
  if (!obs.is_array() || obs.empty()) {
    throw ParseError(source, std::nullopt, "/observations", "expected a non-empty array");
  }
  const fs::path dir = path.parent_path();
  auto curve = [&](const json& p, const std::string& where) {
    const fs::path file = dir / text_field(p, source, where);
    const std::string name = file.string();
    return parse_grid_csv(read_text(file), name, step);
  };
  std::vector<Observation> out;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string where = "/observations/" + std::to_string(i);
    Observation o{curve(field(obs[i], "y", source, where), where + "/y"), {}, {}};
    const auto& xs = field(obs[i], "x", source, where);
    if (!xs.is_array()) throw ParseError(source, std::nullopt, where + "/x", "expected an array");
    for (std::size_t k = 0; k < xs.size(); ++k) o.x.push_back(curve(xs[k], where + "/x/" + std::to_string(k)));
    if (const auto it = obs[i].find("z"); it != obs[i].end()) o.z = numbers(*it, source, where + "/z");
    out.push_back(std::move(o));
  }
  return Design(std::move(out), std::move(lags), step);
}

fs::path write_design(const Design& design, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create directory '" + dir.string() + "'");
  json obs = json::array();
  for (std::size_t i = 0; i < design.n(); ++i) {
    const auto& o = design.observation(i);
    const std::string stem = "obs" + std::to_string(i);
    write_text_atomic(dir / (stem + "_y.csv"), grid_csv(o.y));
    json xs = json::array();
    for (std::size_t j = 0; j < o.x.size(); ++j) {
      const std::string name = stem + "_x" + std::to_string(j + 1) + ".csv";
      write_text_atomic(dir / name, grid_csv(o.x[j]));
      xs.push_back(name);
    }
    obs.push_back({{"y", stem + "_y.csv"}, {"x", xs}, {"z", o.z}});
  }
  const json manifest = {{"format_version", format_version},
                         {"step", design.step()},
                         {"lags", design.lags()},
                         {"observations", obs}};
  const fs::path path = dir / "manifest.json";
  write_text_atomic(path, dump(manifest));
  return path;
}

SimulationSpec parse_simulation_spec(const json& j, const std::string& source) {
  check_version(j, source);
  SimulationSpec spec;
  spec.n = unsigned_integer(field(j, "n", source, ""), source, "/n");
  spec.seed = unsigned_integer(field(j, "seed", source, ""), source, "/seed");
  if (const auto it = j.find("beta0"); it != j.end()) spec.beta0 = numbers(*it, source, "/beta0");
  if (const auto it = j.find("domain_lengths"); it != j.end()) {
    spec.domain_lengths = numbers(*it, source, "/domain_lengths");
  }
  if (const auto it = j.find("noise"); it != j.end()) {
    const std::string where = "/noise";
    try {
      if (const auto k = it->find("kind"); k != it->end()) spec.noise.kind = parse_noise_kind(text_field(*k, source, where + "/kind"));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, std::nullopt, where + "/kind", e.what());
    }
    spec.noise.sd = opt_number(*it, "sd", 0.0, source, where);
    spec.noise.ar_coefficient = opt_number(*it, "ar_coefficient", 0.0, source, where);
  }

  const auto& covs = field(j, "covariates", source, "");
  const auto& kernels = field(j, "kernels", source, "");
  if (!covs.is_array() || !kernels.is_array() || covs.size() != kernels.size() || covs.empty()) {
    throw ParseError(source, std::nullopt, "/kernels", "need one kernel per covariate");
  }
  for (std::size_t k = 0; k < covs.size(); ++k) {
    const std::string where = "/covariates/" + std::to_string(k);
    const auto& c = covs[k];
    GeneratorSpec g;
    try {
      g.kind = parse_covariate_kind(text_field(field(c, "kind", source, where), source, where + "/kind"));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, std::nullopt, where + "/kind", e.what());
    }
    g.T = number(field(c, "T", source, where), source, where + "/T");
    g.step = number(field(c, "step", source, where), source, where + "/step");
    if (const auto it = c.find("seed"); it != c.end()) g.seed = unsigned_integer(*it, source, where + "/seed");
    if (const auto it = c.find("K"); it != c.end()) g.K = unsigned_integer(*it, source, where + "/K");
    if (const auto it = c.find("terms"); it != c.end()) {
      if (!it->is_array()) throw ParseError(source, std::nullopt, where + "/terms", "expected an array");
      for (std::size_t q = 0; q < it->size(); ++q) {
        const auto& t = (*it)[q];
        const std::string tw = where + "/terms/" + std::to_string(q);
        SelfSimilarTerm term;
        term.c = opt_number(t, "c", 1.0, source, tw);
        if (const auto m = t.find("m"); m != t.end()) term.m = static_cast<unsigned>(unsigned_integer(*m, source, tw + "/m"));
        term.a = opt_number(t, "a", 0.0, source, tw);
        term.b = opt_number(t, "b", 0.0, source, tw);
        term.d = opt_number(t, "d", 0.0, source, tw);
        g.terms.push_back(term);
      }
    }
    if (const auto it = c.find("filter"); it != c.end()) {
      const std::string fw = where + "/filter";
      if (const auto v = it->find("corner"); v != it->end()) g.filter.corner = number(*v, source, fw + "/corner");
      if (const auto v = it->find("cutoff"); v != it->end()) g.filter.cutoff = number(*v, source, fw + "/cutoff");
      if (const auto v = it->find("components"); v != it->end()) {
        g.filter.components = unsigned_integer(*v, source, fw + "/components");
      }
    }
    spec.covariates.push_back(std::move(g));

    const std::string kw = "/kernels/" + std::to_string(k);
    const auto& kj = kernels[k];
    KernelSpec ks;
    try {
      if (const auto it = kj.find("kind"); it != kj.end()) ks.kind = parse_kernel_kind(text_field(*it, source, kw + "/kind"));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, std::nullopt, kw + "/kind", e.what());
    }
    spec.lags.push_back(number(field(kj, "lag", source, kw), source, kw + "/lag"));
    ks.amplitude = opt_number(kj, "amplitude", 1.0, source, kw);
    if (const auto it = kj.find("power"); it != kj.end()) ks.power = static_cast<unsigned>(unsigned_integer(*it, source, kw + "/power"));
    ks.slope = opt_number(kj, "slope", 1.0, source, kw);
    ks.frequency = opt_number(kj, "frequency", 1.0, source, kw);
    ks.rate = opt_number(kj, "rate", 1.0, source, kw);
    if (const auto it = kj.find("values"); it != kj.end()) ks.values = numbers(*it, source, kw + "/values");
    spec.kernels.push_back(std::move(ks));
  }
  return spec;
}

json simulation_spec_json(const SimulationSpec& spec) {
  json covs = json::array();
  json kernels = json::array();
  for (std::size_t k = 0; k < spec.covariates.size(); ++k) {
    const auto& g = spec.covariates[k];
    json c = {{"kind", to_string(g.kind)}, {"T", g.T}, {"step", g.step}, {"seed", g.seed}, {"K", g.K}};
    if (!g.terms.empty()) {
      json terms = json::array();
      for (const auto& t : g.terms) terms.push_back({{"c", t.c}, {"m", t.m}, {"a", t.a}, {"b", t.b}, {"d", t.d}});
      c["terms"] = terms;
    }
    json filter = {{"components", g.filter.components}};
    if (g.filter.corner) filter["corner"] = *g.filter.corner;
    if (g.filter.cutoff) filter["cutoff"] = *g.filter.cutoff;
    c["filter"] = filter;
    covs.push_back(std::move(c));

    const auto& ks = spec.kernels[k];
    json kj = {{"lag", spec.lags[k]}, {"kind", to_string(ks.kind)}, {"amplitude", ks.amplitude},
               {"power", ks.power}, {"slope", ks.slope}, {"frequency", ks.frequency}, {"rate", ks.rate}};
    if (!ks.values.empty()) kj["values"] = ks.values;
    kernels.push_back(std::move(kj));
  }
  json j = {{"format_version", format_version},
            {"n", spec.n},
            {"seed", spec.seed},
            {"beta0", spec.beta0},
            {"noise", {{"kind", to_string(spec.noise.kind)}, {"sd", spec.noise.sd}, {"ar_coefficient", spec.noise.ar_coefficient}}},
            {"covariates", covs},
            {"kernels", kernels}};
  if (!spec.domain_lengths.empty()) j["domain_lengths"] = spec.domain_lengths;
  return j;
}

SimulatedDesign simulate(const SimulationSpec& spec) {
  if (spec.covariates.empty() || spec.kernels.size() != spec.covariates.size() ||
      spec.lags.size() != spec.covariates.size()) {
    throw Error(ErrorCode::shape, "simulation needs one kernel and lag per covariate");
  }
  CoefficientSet truth;
  truth.beta0 = spec.beta0;
  for (std::size_t j = 0; j < spec.kernels.size(); ++j) {
    truth.betas.push_back(sample_kernel(spec.kernels[j], spec.lags[j], spec.covariates[j].step));
  }
  return gen_design(spec.covariates, truth, spec.noise, spec.n, spec.seed, spec.domain_lengths);
}

json fit_json(const FitResult& result) {
  json j = {{"format_version", format_version},
            {"solver", to_string(result.solver_used)},
            {"lambda", result.lambda},
            {"minimum_norm", result.solver_used == Solver::truncated_svd},
            {"sse", number_or_null(result.sse_value)},
            {"gram_min_eigenvalue", number_or_null(result.gram_min_eigenvalue)},
            {"gram_condition", number_or_null(result.gram_condition)},
            {"coefficients", coefficients_json(result.coef)}};
  j["truncation_rank"] = result.truncation_rank ? json(*result.truncation_rank) : json(nullptr);
  return j;
}

json spectrum_json(const SpectrumReport& s) {
  return {{"tol", s.tol},
          {"numerical_rank", s.numerical_rank},
          {"block_size", s.block_size},
          {"null_dimension", s.null_basis.size()},
          {"eigenvalues", s.eigenvalues}};
}

json diagnosis_json(const Diagnosis& d) {
  json reports = json::array();
  for (const auto& r : d.reports) {
    json modes = json::array();
    for (const auto& m : r.modes) modes.push_back({{"a", m.a}, {"b", m.b}, {"multiplicity", m.multiplicity}});
    reports.push_back({{"observation", r.observation},
                       {"covariate", r.covariate},
                       {"estimated_order", r.estimated_order},
                       {"finite_dimensional", r.finite_dimensional},
                       {"residual", r.residual},
                       {"residuals", r.residuals},
                       {"recurrence_coeffs", r.recurrence_coeffs},
                       {"modes", modes}});
  }
  return {{"format_version", format_version},
          {"verdict", d.identifiable ? "identifiable" : "non-identifiable"},
          {"spectrum", spectrum_json(d.spectrum)},
          {"finite_dimensional", d.finite_dimensional},
          {"thresholds",
           {{"spectrum_tol", d.options.spectrum_tol},
            {"residual_tol", d.options.residual_tol},
            {"cluster_tol", d.options.cluster_tol},
            {"stride", d.options.stride}}},
          {"covariates", reports}};
}

std::string spectrum_csv(const std::vector<double>& values) {
  std::string out = "index,sigma\n";
  for (std::size_t k = 0; k < values.size(); ++k) out += std::to_string(k) + "," + format_double(values[k]) + "\n";
  return out;
}

std::string residual_csv(const Diagnosis& d) {
  std::string out = "observation,covariate,K,residual\n";
  for (const auto& r : d.reports) {
    for (std::size_t K = 0; K < r.residuals.size(); ++K) {
      out += std::to_string(r.observation) + "," + std::to_string(r.covariate) + "," + std::to_string(K) + "," +
             format_double(r.residuals[K]) + "\n";
    }
  }
  return out;
}

std::string flm_csv(const FlmDataset& data) {
  std::string out = "row,observation,l,t,y";
  for (std::size_t k = 0; k < data.d; ++k) out += ",z" + std::to_string(k + 1);
  const auto layout = data.layout();
  for (std::size_t j = 0; j < data.lags.size(); ++j)
    for (std::size_t q = 0; q < layout.covariate_size(j); ++q) out += ",x" + std::to_string(j + 1) + "_" + std::to_string(q);
  out += '\n';
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    out += std::to_string(r) + "," + std::to_string(row.observation) + "," + std::to_string(row.l) + "," +
           format_double(row.t) + "," + format_double(row.y);
    for (double z : row.z) out += "," + format_double(z);
    for (const auto& w : row.windows)
      for (double v : w.values()) out += "," + format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace fcm::io
