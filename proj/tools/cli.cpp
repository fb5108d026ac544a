#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "fabppi/errors.hpp"
#include "fabppi/harness.hpp"
#include "json.hpp"

namespace fabppi::cli {

namespace {

struct CiInput {
  LabelledSample labelled;
  std::vector<double> unlabelled;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double cell(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || !std::isfinite(v))
    throw ParseError("not a finite number: '" + s + "'", line);
  return v;
}

// Same layout as the study datasets, except an empty y marks an unlabelled row.
CiInput read_ci_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (trim(line) != "y,f") throw ParseError("header must be 'y,f'", 1);
  CiInput d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError("expected two comma-separated fields", lineno);
    const std::string y = trim(line.substr(0, comma));
    const double f = cell(trim(line.substr(comma + 1)), lineno);
    if (y.empty()) {
      d.unlabelled.push_back(f);
    } else {
      d.labelled.y.push_back(cell(y, lineno));
      d.labelled.fx.push_back(f);
    }
  }
  return d;
}

double round10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return std::strtod(buf, nullptr);
}

struct CiArgs {
  std::string method;
  double alpha = 0.1;
  std::string data;
  std::string prior = "horseshoe";
  std::string scale = "sigma";
  std::string mode = "known-m";
  std::optional<double> delta;
  std::string target = "mean";
  std::optional<double> known_mean;
  std::vector<double> grid;
};

int run_ci(const CiArgs& a, std::ostream& out) {
  harness::MethodSpec spec;
  spec.method = parse_method(a.method);
  if (is_fab(spec.method)) spec.prior = parse_prior(a.prior, a.scale);
  DeltaRule mode;
  if (a.mode == "known-m") {
    if (a.delta) throw ConfigError("--delta applies to --mode full only");
    mode = DeltaRule::known_m();
  } else if (a.mode == "full") {
    mode = DeltaRule::full(a.delta);
    mode.resolve(a.alpha);
  } else {
    throw ConfigError("--mode must be known-m or full");
  }

  harness::Target target;
  if (a.target == "mean") {
    target.kind = harness::Target::Kind::Mean;
  } else if (a.target.rfind("quantile:", 0) == 0) {
    target.kind = harness::Target::Kind::Quantile;
    char* end = nullptr;
    target.q = std::strtod(a.target.c_str() + 9, &end);
    if (*end != '\0' || !(target.q > 0.0 && target.q < 1.0))
      throw ConfigError("--target quantile level must lie in (0,1)");
  } else {
    throw ConfigError("--target must be mean or quantile:<q>");
  }

  std::optional<ThetaGrid> grid;
  if (!a.grid.empty()) {
    if (a.grid.size() != 3 || !(a.grid[2] >= 3.0)) throw ConfigError("--grid takes lo,hi,count");
    grid = ThetaGrid{a.grid[0], a.grid[1], static_cast<std::size_t>(a.grid[2])};
  }

  CiInput data = read_ci_csv(a.data);
  if (data.labelled.n() < 2) throw SampleSizeError("need at least two labelled rows");
  UnlabelledSample unl;
  if (a.known_mean) {
    if (!data.unlabelled.empty()) throw ConfigError("--known-mean conflicts with unlabelled rows");
    unl = UnlabelledSample::analytic(*a.known_mean, 0.0);
  } else if (spec.method != Method::Classical) {
    if (data.unlabelled.size() < 2)
      throw ConfigError("prediction-powered methods need unlabelled rows (empty y) or --known-mean");
    unl = UnlabelledSample::from_predictions(data.unlabelled);
  }

  const EstimateReport r = harness::run_method(spec, mode, target, data.labelled, unl, a.alpha, grid);

  nlohmann::ordered_json j;
  j["method"] = method_id(r.method);
  j["prior"] = r.prior ? r.prior->label() : "none";
  j["mode"] = spec.method == Method::Classical ? "-" : mode.label();
  j["target"] = target.label();
  j["alpha"] = r.alpha;
  j["delta"] = round10(r.delta);
  j["n"] = data.labelled.n();
  if (unl.is_analytic() || spec.method == Method::Classical) {
    j["N"] = "inf";
  } else {
    j["N"] = unl.size();
  }
  j["point"] = round10(r.point);
  nlohmann::ordered_json region = nlohmann::ordered_json::array();
  for (const auto& iv : r.region.intervals()) region.push_back({round10(iv.lo), round10(iv.hi)});
  j["region"] = region;
  j["volume"] = round10(r.region.volume());
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = round10(v);
  j["diagnostics"] = diag;
  out << j.dump(2) << "\n";
  return 0;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::string format;
  bool fast = false;
  std::size_t threads = 0;
};

int run_study_cmd(const RunArgs& a, std::ostream& out, std::ostream& err) {
  harness::ExperimentConfig cfg = harness::load_config(a.config);
  if (a.fast) cfg.repetitions = 200;
  harness::Format fmt = harness::Format::Csv;
  if (!a.format.empty()) {
    fmt = harness::parse_format(a.format);
  } else if (a.out.size() > 5 && a.out.compare(a.out.size() - 5, 5, ".json") == 0) {
    fmt = harness::Format::Json;
  }
  harness::RunOptions opts;
  opts.threads = a.threads;
  opts.warn = [&err](const std::string& msg) { err << "warning: " << msg << "\n"; };
  const auto rows = harness::run_study(cfg, opts);
  if (a.out.empty() || a.out == "-") {
    out << harness::render(rows, fmt);
  } else {
    harness::emit(rows, fmt, a.out);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prediction-powered inference with FAB confidence regions", "fabppi"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "run a study described by a JSON config");
  run_cmd->add_option("--config", ra.config, "study config (JSON)")->required();
  run_cmd->add_option("--out", ra.out, "output path (default stdout)");
  run_cmd->add_option("--format", ra.format, "csv or json (default from --out extension, else csv)");
  run_cmd->add_flag("--fast", ra.fast, "200 repetitions");
  run_cmd->add_option("--threads", ra.threads, "worker threads (0: FABPPI_THREADS or all cores)");

  CiArgs ca;
  auto* ci_cmd = app.add_subcommand("ci", "one-shot estimate and confidence region from a CSV");
  ci_cmd->add_option("--method", ca.method, "classical, ppi, ppi++, fab-ppi or fab-ppi++")->required();
  ci_cmd->add_option("--alpha", ca.alpha, "miscoverage level");
  ci_cmd->add_option("--data", ca.data, "CSV with header y,f; empty y marks unlabelled rows")->required();
  ci_cmd->add_option("--prior", ca.prior, "horseshoe or gaussian");
  ci_cmd->add_option("--scale", ca.scale, "sigma, inv-sqrt-n or fixed=<tau>");
  ci_cmd->add_option("--mode", ca.mode, "known-m or full");
  ci_cmd->add_option("--delta", ca.delta, "rectifier level in full mode (default alpha/2)");
  ci_cmd->add_option("--target", ca.target, "mean or quantile:<q>");
  ci_cmd->add_option("--known-mean", ca.known_mean, "known mean of the predictions (N infinite)");
  ci_cmd->add_option("--grid", ca.grid, "theta grid lo,hi,count for quantiles")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return run_study_cmd(ra, out, err);
    return run_ci(ca, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const SampleSizeError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace fabppi::cli
