#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "fabppi/errors.hpp"
#include "fabppi/harness.hpp"
#include "fabppi/specfun.hpp"

namespace fabppi::harness {

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FABPPI_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

LabelledSample draw_biased(Rng& rng, std::size_t n, double gamma) {
  LabelledSample s;
  s.y.resize(n);
  s.fx.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    const double eps = rng.normal();
    s.y[i] = x + eps;
    s.fx[i] = x + gamma;
  }
  return s;
}

LabelledSample draw_noisy(Rng& rng, std::size_t n, double sigma_y) {
  LabelledSample s;
  s.y.resize(n);
  s.fx.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.y[i] = rng.normal();
    s.fx[i] = s.y[i] + sigma_y * rng.normal();
  }
  return s;
}

std::vector<double> draw_noisy_unlabelled(Rng& rng, std::size_t big_n, double sigma_y) {
  std::vector<double> f(big_n);
  for (auto& v : f) {
    const double y = rng.normal();
    v = y + sigma_y * rng.normal();
  }
  return f;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_cell(const std::string& cell, std::size_t line) {
  const std::string t = trim(cell);
  if (t.empty()) throw ParseError("empty value", line);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (*end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw ParseError("not a finite number: '" + t + "'", line);
  return v;
}

std::string tag_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

double empirical_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::min(v.size() - 1, k == 0 ? 0 : k - 1)];
}

ThetaGrid default_grid(const LabelledSample& l, const UnlabelledSample& u) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* v : {&l.y, &l.fx, &u.fx()}) {
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  const double pad = std::max(0.05 * (hi - lo), 1e-6);
  return {lo - pad, hi + pad, 2001};
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++lineno;
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  std::string header = trim(line);
  header.erase(std::remove_if(header.begin(), header.end(), ::isspace), header.end());
  if (header != "y,f") throw ParseError("header must be 'y,f'", 1);
  Dataset d;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError("expected two comma-separated fields", lineno);
    d.y.push_back(parse_cell(line.substr(0, comma), lineno));
    d.f.push_back(parse_cell(line.substr(comma + 1), lineno));
  }
  return d;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  if (data.y.size() != data.f.size()) throw DomainError("dataset columns differ in length");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "y,f\n";
  char buf[80];
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", data.y[i], data.f[i]);
    out << buf;
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

EstimateReport run_method(const MethodSpec& spec, const DeltaRule& default_mode,
                          const Target& target, const LabelledSample& labelled,
                          const UnlabelledSample& unlabelled, double alpha,
                          const std::optional<ThetaGrid>& grid) {
  const DeltaRule mode = spec.mode.value_or(default_mode);
  const bool tuned = is_power_tuned(spec.method);
  const PriorSpec prior = spec.prior.value_or(PriorSpec::horseshoe());
  if (target.kind == Target::Kind::Mean) {
    if (spec.method == Method::Classical) return classical_mean(labelled, alpha);
    if (is_fab(spec.method)) return fab_ppi_mean(labelled, unlabelled, prior, alpha, mode, tuned);
    return ppi_mean(labelled, unlabelled, alpha, tuned, mode);
  }
  const LossModel loss = LossModel::pinball(target.q);
  const ThetaGrid g = grid ? *grid : default_grid(labelled, unlabelled);
  if (spec.method == Method::Classical) return classical_convex(labelled, loss, alpha, g);
  if (is_fab(spec.method))
    return fab_ppi_convex(labelled, unlabelled, loss, prior, alpha, mode, tuned, g);
  return ppi_convex(labelled, unlabelled, loss, alpha, mode, tuned, g);
}

namespace {

struct Outcome {
  double sq_err = 0.0;
  double volume = 0.0;
  bool covered = false;
  bool fallback = false;
};

// Degenerate samples (zero spread, constant predictions) fall back to
// untuned PPI, whose region collapses to the point.
Outcome evaluate(const MethodSpec& spec, const ExperimentConfig& cfg, const LabelledSample& l,
                 const UnlabelledSample& u, double truth) {
  const DeltaRule default_mode =
      cfg.scenario == Scenario::Biased ? DeltaRule::known_m() : cfg.delta_rule;
  MethodSpec s = spec;
  if (cfg.scenario == Scenario::Biased) s.mode = DeltaRule::known_m();
  Outcome o;
  EstimateReport r;
  try {
    r = run_method(s, default_mode, cfg.target, l, u, cfg.alpha, cfg.theta_grid);
  } catch (const DegeneracyError&) {
    o.fallback = true;
    const DeltaRule mode = s.mode.value_or(default_mode);
    if (cfg.target.kind == Target::Kind::Mean) {
      r = ppi_mean(l, u, cfg.alpha, false, mode, 1.0);
    } else {
      MethodSpec plain{Method::PPI, std::nullopt, mode};
      r = run_method(plain, default_mode, cfg.target, l, u, cfg.alpha, cfg.theta_grid);
    }
  }
  o.sq_err = (r.point - truth) * (r.point - truth);
  o.volume = r.region.volume();
  o.covered = r.region.contains(truth);
  return o;
}

std::string mode_label(const MethodSpec& m, const ExperimentConfig& cfg) {
  if (m.method == Method::Classical) return "-";
  if (cfg.scenario == Scenario::Biased) return DeltaRule::known_m().label();
  return m.mode.value_or(cfg.delta_rule).label();
}

struct Cell {
  std::string param;
  std::size_t n;
  std::optional<std::size_t> N;
  StreamKey key;
  double truth;
  // Draws one repetition's labelled and unlabelled samples.
  std::function<std::pair<LabelledSample, UnlabelledSample>(Rng&)> draw;
};

// Runs all repetitions of one cell; results land in rep order so the
// aggregate does not depend on the thread count.
std::vector<MetricsRow> run_cell(const ExperimentConfig& cfg, const Cell& cell, const RunOptions& opts,
                                 const std::string& scenario) {
  const std::size_t reps = cfg.repetitions;
  const std::size_t m = cfg.methods.size();
  std::vector<Outcome> out(reps * m);
  std::vector<std::exception_ptr> errors(reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= reps) return;
      try {
        Rng rng = seed_stream(cfg.master_seed, cell.key, rep);
        const auto [l, u] = cell.draw(rng);
        for (std::size_t k = 0; k < m; ++k)
          out[rep * m + k] = evaluate(cfg.methods[k], cfg, l, u, cell.truth);
      } catch (...) {
        errors[rep] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(resolve_threads(opts.threads), reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<MetricsRow> rows;
  for (std::size_t k = 0; k < m; ++k) {
    const MethodSpec& spec = cfg.methods[k];
    double se = 0.0;
    double vol = 0.0;
    std::size_t cov = 0;
    std::size_t fallbacks = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const Outcome& o = out[rep * m + k];
      se += o.sq_err;
      vol += o.volume;
      cov += o.covered ? 1 : 0;
      fallbacks += o.fallback ? 1 : 0;
    }
    MetricsRow r;
    r.scenario = scenario;
    r.param = cell.param;
    r.n = cell.n;
    r.N = cell.N;
    r.method = method_id(spec.method);
    r.prior = spec.prior ? spec.prior->label() : "none";
    r.mode = mode_label(spec, cfg);
    const auto dr = static_cast<double>(reps);
    r.mse = se / dr;
    r.avg_volume = vol / dr;
    r.coverage = static_cast<double>(cov) / dr;
    r.reps = reps;
    r.truth = cell.truth;
    rows.push_back(r);
    if (fallbacks > 0 && opts.warn) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "%s param=%s n=%zu %s: %zu of %zu repetitions were degenerate; used PPI with lambda=1",
                    scenario.c_str(), cell.param.c_str(), cell.n, r.method.c_str(), fallbacks, reps);
      opts.warn(buf);
    }
  }
  return rows;
}

std::string fmt_param(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void expect(const ExperimentConfig& cfg, Scenario s, const char* name) {
  if (cfg.scenario != s) throw ConfigError(std::string("config scenario is not ") + name);
  validate(cfg);
}

}  // namespace

std::vector<MetricsRow> run_biased_study(const ExperimentConfig& cfg, const RunOptions& opts) {
  expect(cfg, Scenario::Biased, "biased");
  std::vector<MetricsRow> rows;
  for (double gamma : cfg.gamma_grid) {
    for (std::size_t n : cfg.n) {
      Cell c;
      c.param = fmt_param(gamma);
      c.n = n;
      c.key = {"biased", {gamma, static_cast<double>(n)}};
      c.truth = 0.0;
      c.draw = [n, gamma](Rng& rng) {
        return std::make_pair(draw_biased(rng, n, gamma), UnlabelledSample::analytic(gamma, 1.0));
      };
      auto r = run_cell(cfg, c, opts, "biased");
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  return rows;
}

std::vector<MetricsRow> run_noisy_study(const ExperimentConfig& cfg, const RunOptions& opts) {
  expect(cfg, Scenario::Noisy, "noisy");
  const std::size_t big_n = *cfg.N;
  const double truth = cfg.target.kind == Target::Kind::Mean
                           ? 0.0
                           : specfun::norm_quantile(cfg.target.q);
  std::vector<MetricsRow> rows;
  for (double sigma : cfg.sigma_y_list) {
    for (std::size_t n : cfg.n) {
      Cell c;
      c.param = fmt_param(sigma);
      c.n = n;
      c.N = big_n;
      c.key = {"noisy", {sigma, static_cast<double>(n), static_cast<double>(big_n)}};
      c.truth = truth;
      c.draw = [n, big_n, sigma](Rng& rng) {
        LabelledSample l = draw_noisy(rng, n, sigma);
        return std::make_pair(std::move(l),
                              UnlabelledSample::from_predictions(draw_noisy_unlabelled(rng, big_n, sigma)));
      };
      auto r = run_cell(cfg, c, opts, "noisy");
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  return rows;
}

std::vector<MetricsRow> run_dataset_study(const ExperimentConfig& cfg, const RunOptions& opts) {
  expect(cfg, Scenario::Dataset, "dataset");
  const auto data = std::make_shared<const Dataset>(read_dataset_csv(cfg.dataset_path));
  const std::size_t rows_total = data->y.size();
  for (std::size_t n : cfg.n)
    if (n + 2 > rows_total)
      throw SampleSizeError("dataset has " + std::to_string(rows_total) + " rows; n = " +
                            std::to_string(n) + " needs at least n + 2");
  const double truth = cfg.target.kind == Target::Kind::Mean
                           ? stats::mean(data->y)
                           : empirical_quantile(data->y, cfg.target.q);
  const std::string tag = tag_of(cfg.dataset_path);
  std::vector<MetricsRow> rows;
  for (std::size_t n : cfg.n) {
    Cell c;
    c.param = tag;
    c.n = n;
    c.N = rows_total - n;
    c.key = {"dataset:" + tag, {static_cast<double>(n), static_cast<double>(rows_total)}};
    c.truth = truth;
    c.draw = [n, data](Rng& rng) {
      const std::size_t total = data->y.size();
      std::vector<std::size_t> idx(total);
      for (std::size_t i = 0; i < total; ++i) idx[i] = i;
      for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(total - i)]);
      LabelledSample l;
      l.y.reserve(n);
      l.fx.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        l.y.push_back(data->y[idx[i]]);
        l.fx.push_back(data->f[idx[i]]);
      }
      std::vector<double> f;
      f.reserve(total - n);
      for (std::size_t i = n; i < total; ++i) f.push_back(data->f[idx[i]]);
      return std::make_pair(std::move(l), UnlabelledSample::from_predictions(std::move(f)));
    };
    auto r = run_cell(cfg, c, opts, "dataset");
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

std::vector<MetricsRow> run_study(const ExperimentConfig& cfg, const RunOptions& opts) {
  switch (cfg.scenario) {
    case Scenario::Biased:
      return run_biased_study(cfg, opts);
    case Scenario::Noisy:
      return run_noisy_study(cfg, opts);
    case Scenario::Dataset:
      return run_dataset_study(cfg, opts);
  }
  throw InternalError("unknown scenario");
}

}  // namespace fabppi::harness
