#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fabppi/errors.hpp"
#include "fabppi/harness.hpp"
#include "json.hpp"

namespace fabppi::harness {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw ConfigError(what + " must be a positive integer");
  return j.get<std::size_t>();
}

std::vector<double> numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

DeltaRule parse_delta_rule(const json& j) {
  if (j.is_string()) {
    const std::string s = lower(j.get<std::string>());
    if (s == "known-m" || s == "knownm") return DeltaRule::known_m();
    if (s == "full") return DeltaRule::full();
    if (s.rfind("full:", 0) == 0) {
      char* end = nullptr;
      const double d = std::strtod(s.c_str() + 5, &end);
      if (*end != '\0') throw ConfigError("bad delta_rule '" + s + "'");
      return DeltaRule::full(d);
    }
    throw ConfigError("bad delta_rule '" + s + "'");
  }
  if (j.is_object() && j.size() == 1 && j.contains("full"))
    return DeltaRule::full(number(j.at("full"), "delta_rule.full"));
  throw ConfigError("delta_rule must be \"known-m\", \"full\" or {\"full\": delta}");
}

Target parse_target(const json& j) {
  Target t;
  if (j.is_string()) {
    const std::string s = lower(j.get<std::string>());
    if (s == "mean") return t;
    if (s == "quantile" || s == "median") {
      t.kind = Target::Kind::Quantile;
      return t;
    }
    if (s.rfind("quantile:", 0) == 0) {
      char* end = nullptr;
      t.kind = Target::Kind::Quantile;
      t.q = std::strtod(s.c_str() + 9, &end);
      if (*end != '\0') throw ConfigError("bad target '" + s + "'");
      return t;
    }
    throw ConfigError("bad target '" + s + "'");
  }
  if (j.is_object() && j.size() == 1 && j.contains("quantile")) {
    t.kind = Target::Kind::Quantile;
    t.q = number(j.at("quantile"), "target.quantile");
    return t;
  }
  throw ConfigError("target must be \"mean\" or {\"quantile\": q}");
}

MethodSpec parse_method_spec(const json& j) {
  MethodSpec m;
  std::string family = "horseshoe";
  std::string scale = "sigma";
  if (j.is_string()) {
    // id[:family[:scale]]
    const auto parts = split(lower(j.get<std::string>()), ':');
    if (parts.empty() || parts.size() > 3) throw ConfigError("bad method descriptor");
    m.method = parse_method(parts[0]);
    if (parts.size() > 1) family = parts[1];
    if (parts.size() > 2) scale = parts[2];
    if (parts.size() > 1 && !is_fab(m.method))
      throw ConfigError("only FAB methods take a prior: '" + j.get<std::string>() + "'");
  } else if (j.is_object()) {
    static const std::set<std::string> keys = {"method", "prior", "scale", "mode"};
    for (const auto& [k, v] : j.items())
      if (!keys.count(k)) throw ConfigError("unknown method field '" + k + "'");
    if (!j.contains("method") || !j.at("method").is_string())
      throw ConfigError("method descriptor needs a \"method\" string");
    m.method = parse_method(lower(j.at("method").get<std::string>()));
    if (j.contains("prior")) family = lower(j.at("prior").get<std::string>());
    if (j.contains("scale")) {
      const auto& s = j.at("scale");
      if (s.is_number()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", s.get<double>());
        scale = buf;
      } else {
        scale = lower(s.get<std::string>());
      }
    }
    if ((j.contains("prior") || j.contains("scale")) && !is_fab(m.method))
      throw ConfigError("only FAB methods take a prior");
    if (j.contains("mode")) m.mode = parse_delta_rule(j.at("mode"));
  } else {
    throw ConfigError("method descriptor must be a string or an object");
  }
  if (is_fab(m.method)) m.prior = parse_prior(family, scale);
  return m;
}

ThetaGrid parse_grid(const json& j) {
  ThetaGrid g{0.0, 0.0, 2001};
  if (j.is_array()) {
    if (j.size() != 2 && j.size() != 3) throw ConfigError("theta_grid must be [lo, hi, count]");
    g.lo = number(j[0], "theta_grid.lo");
    g.hi = number(j[1], "theta_grid.hi");
    if (j.size() == 3) g.count = count(j[2], "theta_grid.count");
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      if (k != "lo" && k != "hi" && k != "count") throw ConfigError("unknown theta_grid field '" + k + "'");
    g.lo = number(j.at("lo"), "theta_grid.lo");
    g.hi = number(j.at("hi"), "theta_grid.hi");
    if (j.contains("count")) g.count = count(j.at("count"), "theta_grid.count");
  } else {
    throw ConfigError("theta_grid must be [lo, hi, count] or an object");
  }
  if (!(g.lo < g.hi) || g.count < 3) throw ConfigError("theta_grid needs lo < hi and count >= 3");
  return g;
}

}  // namespace

std::string Target::label() const {
  if (kind == Kind::Mean) return "mean";
  char buf[64];
  std::snprintf(buf, sizeof buf, "quantile:%.10g", q);
  return buf;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "scenario", "n",       "N",     "gamma_grid",  "sigma_y_list", "dataset_path", "target",
      "methods",  "alpha",   "delta_rule", "repetitions", "master_seed", "theta_grid"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config field '" + k + "'");

  ExperimentConfig cfg;
  try {
    if (!j.contains("scenario")) throw ConfigError("config needs a scenario");
    const std::string sc = lower(j.at("scenario").get<std::string>());
    if (sc == "biased") {
      cfg.scenario = Scenario::Biased;
    } else if (sc == "noisy") {
      cfg.scenario = Scenario::Noisy;
      cfg.N = 100000;
    } else if (sc == "dataset") {
      cfg.scenario = Scenario::Dataset;
    } else {
      throw ConfigError("unknown scenario '" + sc + "'");
    }
    if (j.contains("n")) {
      const auto& n = j.at("n");
      cfg.n.clear();
      if (n.is_array()) {
        for (const auto& v : n) cfg.n.push_back(count(v, "n"));
      } else {
        cfg.n.push_back(count(n, "n"));
      }
    }
    if (j.contains("N")) {
      const auto& big = j.at("N");
      if (big.is_string()) {
        const std::string s = lower(big.get<std::string>());
        if (s != "infinite" && s != "inf") throw ConfigError("N must be an integer or \"infinite\"");
        cfg.N.reset();
      } else {
        cfg.N = count(big, "N");
      }
    }
    if (j.contains("gamma_grid")) cfg.gamma_grid = numbers(j.at("gamma_grid"), "gamma_grid");
    if (j.contains("sigma_y_list")) cfg.sigma_y_list = numbers(j.at("sigma_y_list"), "sigma_y_list");
    if (j.contains("dataset_path")) cfg.dataset_path = j.at("dataset_path").get<std::string>();
    if (j.contains("target")) cfg.target = parse_target(j.at("target"));
    if (j.contains("methods")) {
      if (!j.at("methods").is_array()) throw ConfigError("methods must be an array");
      for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method_spec(m));
    }
    if (j.contains("alpha")) cfg.alpha = number(j.at("alpha"), "alpha");
    if (j.contains("delta_rule")) cfg.delta_rule = parse_delta_rule(j.at("delta_rule"));
    if (j.contains("repetitions")) cfg.repetitions = count(j.at("repetitions"), "repetitions");
    if (j.contains("master_seed")) {
      const auto& s = j.at("master_seed");
      if (!s.is_number_integer()) throw ConfigError("master_seed must be an integer");
      cfg.master_seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                               : static_cast<std::uint64_t>(s.get<std::int64_t>());
    }
    if (j.contains("theta_grid")) cfg.theta_grid = parse_grid(j.at("theta_grid"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_config(buf.str());
  // Dataset paths are relative to the config file.
  if (!cfg.dataset_path.empty()) {
    std::filesystem::path p(cfg.dataset_path);
    if (p.is_relative()) cfg.dataset_path = (std::filesystem::path(path).parent_path() / p).string();
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (cfg.n.empty()) throw ConfigError("n must be given");
  for (std::size_t n : cfg.n)
    if (n < 2) throw ConfigError("n must be >= 2");
  if (cfg.methods.empty()) throw ConfigError("methods must be a nonempty list");
  if (cfg.target.kind == Target::Kind::Quantile && !(cfg.target.q > 0.0 && cfg.target.q < 1.0))
    throw ConfigError("quantile level must lie in (0,1)");

  auto check_mode = [&](const DeltaRule& rule) {
    if (rule.kind == DeltaRule::Kind::Full) {
      const double d = rule.delta.value_or(0.5 * cfg.alpha);
      if (!(d > 0.0 && d < cfg.alpha)) throw ConfigError("full mode needs 0 < delta < alpha");
      if (cfg.scenario == Scenario::Biased)
        throw ConfigError("the biased study uses the analytic mean and runs in known-m mode");
    }
  };
  check_mode(cfg.delta_rule);
  for (const auto& m : cfg.methods)
    if (m.mode) check_mode(*m.mode);

  switch (cfg.scenario) {
    case Scenario::Biased:
      if (cfg.gamma_grid.empty()) throw ConfigError("biased study needs gamma_grid");
      if (cfg.N) throw ConfigError("biased study assumes N infinite");
      if (cfg.target.kind != Target::Kind::Mean) throw ConfigError("biased study targets the mean");
      break;
    case Scenario::Noisy:
      if (cfg.sigma_y_list.empty()) throw ConfigError("noisy study needs sigma_y_list");
      for (double s : cfg.sigma_y_list)
        if (!(s > 0.0)) throw ConfigError("sigma_y_list entries must be positive");
      if (!cfg.N || *cfg.N < 2) throw ConfigError("noisy study needs a finite N >= 2");
      break;
    case Scenario::Dataset:
      if (cfg.dataset_path.empty()) throw ConfigError("dataset study needs dataset_path");
      if (cfg.N) throw ConfigError("dataset study derives N from the file; drop the N field");
      break;
  }
}

}  // namespace fabppi::harness
