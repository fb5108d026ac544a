// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [id...]   (ids 1-10 and D; default runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fabppi/fabcr.hpp"
#include "fabppi/harness.hpp"
#include "fabppi/ppi.hpp"
#include "fabppi/priors.hpp"
#include "fabppi/specfun.hpp"
#include "oracles.hpp"

#ifndef FABPPI_CONFIG_DIR
#error "FABPPI_CONFIG_DIR must point at the bundled configs"
#endif

using namespace fabppi;
using harness::MetricsRow;

namespace {

constexpr std::uint64_t kSeed = 20240501;

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Collects sub-check outcomes for one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failed_.push_back(what);
    all_.push_back(what);
  }
  bool ok() const { return failed_.empty(); }
  std::string summary() const {
    const auto& v = failed_.empty() ? all_ : failed_;
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
    return s;
  }

 private:
  std::vector<std::string> all_;
  std::vector<std::string> failed_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void runtime(Checks& c, std::chrono::steady_clock::time_point t0, double limit) {
  const double s = seconds_since(t0);
  c.expect(s < limit, fmt("runtime %.1fs < %.0fs", s, limit));
}

std::string family_name(PriorFamily f) { return f == PriorFamily::Horseshoe ? "hs" : "gauss"; }

// --- 1 ---------------------------------------------------------------------

Checks special_functions() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  double worst = 0.0;
  for (double x = -10.0; x <= 10.0 + 1e-12; x += 0.05)
    worst = std::max(worst, std::fabs(specfun::norm_cdf(x) - static_cast<double>(oracle::cdf(x))));
  c.expect(worst <= 1e-12, fmt("norm_cdf abs err %.2e <= 1e-12", worst));
  c.expect(std::fabs(specfun::norm_cdf(1.6448536) - 0.95) <= 1e-7, "norm_cdf(1.6448536) = 0.95");

  worst = 0.0;
  for (int k = 1; k <= 99; ++k) {
    const double p = k / 100.0;
    worst = std::max(worst, std::fabs(static_cast<double>(oracle::cdf(specfun::norm_quantile(p))) - p));
  }
  c.expect(worst <= 1e-10, fmt("quantile round trip %.2e <= 1e-10", worst));
  const double q95 = specfun::norm_quantile(0.95);
  const double q975 = specfun::norm_quantile(0.975);
  c.expect(std::fabs(q95 - static_cast<double>(oracle::quantile(0.95L))) <= 1e-6 &&
               std::fabs(q95 - 1.6448536) <= 1e-6 && std::fabs(q975 - 1.9599640) <= 1e-6,
           "quantile reference values");

  worst = 0.0;
  for (double x : {0.01, 0.1, 0.5, 0.9241, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 10.0, 20.0}) {
    worst = std::max(worst, std::fabs(specfun::dawson(x) - static_cast<double>(oracle::dawson(x))));
    worst = std::max(worst, std::fabs(specfun::dawson(-x) + specfun::dawson(x)));
  }
  c.expect(worst <= 1e-10, fmt("dawson abs err %.2e <= 1e-10", worst));
  c.expect(std::fabs(specfun::dawson(1.0) - 0.5380795) <= 1e-6, "dawson(1) = 0.5380795");

  worst = 0.0;
  for (double a : {1.0, 2.0}) {
    for (double z : {0.0, -0.5, -5.0, -20.0, -29.9, -30.1, -50.0, -100.0, -400.0}) {
      const double o = static_cast<double>(oracle::f11_half(a, z));
      worst = std::max(worst, std::fabs(specfun::kummer_1f1(a, a + 0.5, z) / o - 1.0));
    }
  }
  c.expect(worst <= 1e-9, fmt("1F1 rel err %.2e <= 1e-9", worst));

  worst = 0.0;
  for (int i = 1; i <= 10000; ++i) {
    const double x = i * 1e-3;
    worst = std::max(worst, std::fabs(specfun::kummer_1f1(1.0, 1.5, -x * x) * x / specfun::dawson(x) - 1.0));
  }
  c.expect(worst <= 1e-7, fmt("1F1/dawson identity rel err %.2e <= 1e-7", worst));
  runtime(c, t0, 5.0);
  return c;
}

// --- 2 ---------------------------------------------------------------------

Checks horseshoe_marginal() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  double worst = 0.0;
  for (double y = -10.0; y <= 10.0 + 1e-12; y += 0.05) {
    const double cf = hs_log_marginal(y, 1.0, 1.0).log_density;
    const double q = hs_log_marginal_quadrature(y, 1.0, 1.0).log_density;
    worst = std::max(worst, std::fabs(std::exp(q - cf) - 1.0));
  }
  c.expect(worst <= 1e-6, fmt("closed form vs quadrature rel %.2e <= 1e-6", worst));

  // Tail beyond L is bounded by the y^-2 decay: 2 * L * pi(L) for both sides.
  const double L = 2000.0;
  auto hs = [](double y) { return std::exp(hs_log_marginal(y, 1.0, 1.0).log_density); };
  const double mass = specfun::integrate(hs, -L, L, {1e-12, 1e-10, 2000}) + 2.0 * L * hs(L);
  c.expect(std::fabs(mass - 1.0) <= 1e-4, fmt("normalization %.8f", mass));

  double slope_err = 0.0;
  for (double y = 30.0; y <= 100.0; y += 1.0) {
    for (double s : {1.0, -1.0}) {
      const double slope = hs_log_marginal(s * y, 1.0, 1.0).log_density_deriv * s * y;
      slope_err = std::max(slope_err, std::fabs(slope + 2.0));
    }
  }
  const double secant = (hs_log_marginal(100.0, 1.0, 1.0).log_density -
                         hs_log_marginal(30.0, 1.0, 1.0).log_density) /
                        std::log(100.0 / 30.0);
  slope_err = std::max(slope_err, std::fabs(secant + 2.0));
  c.expect(slope_err <= 0.05, fmt("tail slope max |s+2| %.4f <= 0.05", slope_err));
  runtime(c, t0, 10.0);
  return c;
}

// --- 3 ---------------------------------------------------------------------

Checks exact_coverage() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  for (PriorFamily fam : {PriorFamily::Horseshoe, PriorFamily::Gaussian}) {
    for (double beta0 : {0.0, 0.5, 2.0, 10.0}) {
      auto rng = harness::seed_stream(kSeed, {"exact-coverage", {static_cast<double>(fam), beta0}}, 0);
      int hit = 0;
      const int draws = 10000;
      for (int i = 0; i < draws; ++i) {
        const double y = beta0 + rng.normal();
        hit += fab_cr(y, 1.0, fam, 1.0, 0.1).contains(beta0) ? 1 : 0;
      }
      const double cov = static_cast<double>(hit) / draws;
      c.expect(std::fabs(cov - 0.9) <= 0.01, fmt("%s b=%g %.4f", family_name(fam).c_str(), beta0, cov));
    }
  }
  runtime(c, t0, 120.0);
  return c;
}

// --- 4 ---------------------------------------------------------------------

Checks reversion() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  const double z = specfun::norm_quantile(0.95);
  const auto clt = ConfidenceRegion::single(-z, z, 0.9);
  for (double sigma : {1.0, 0.2}) {
    const auto r = fab_cr(50.0 * sigma, sigma, PriorFamily::Horseshoe, sigma, 0.1).affine(1.0 / sigma, -50.0);
    const double d = hausdorff_distance(r, clt);
    std::vector<std::pair<double, double>> a;
    for (const auto& iv : r.intervals()) a.emplace_back(iv.lo, iv.hi);
    const double od = oracle::hausdorff(a, {{-z, z}});
    c.expect(d < 0.05 && od < 0.05, fmt("sigma=%g hausdorff %.4f (oracle %.4f) < 0.05", sigma, d, od));
  }
  runtime(c, t0, 5.0);
  return c;
}

// --- 5 ---------------------------------------------------------------------

Checks gaussian_pathology() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  double prev = 0.0;
  bool increasing = true;
  std::string vols;
  double v40 = 0.0;
  for (double y : {10.0, 20.0, 40.0}) {
    const double v = fab_cr(y, 1.0, PriorFamily::Gaussian, 1.0, 0.1).volume();
    increasing = increasing && v > prev;
    prev = v;
    vols += fmt(" %.3f", v);
    v40 = v;
  }
  c.expect(increasing, "volumes increasing:" + vols);
  const double target = 2.0 / 3.0 * 40.0;
  c.expect(std::fabs(v40 / target - 1.0) <= 0.25, fmt("vol(40)/(2/3*40) = %.4f within 25%%", v40 / target));
  runtime(c, t0, 5.0);
  return c;
}

// --- 6 ---------------------------------------------------------------------

const MetricsRow& find_row(const std::vector<MetricsRow>& rows, double param, const std::string& method,
                           const std::string& prior) {
  for (const auto& r : rows)
    if (std::fabs(std::stod(r.param) - param) < 1e-9 && r.method == method && r.prior == prior) return r;
  throw std::runtime_error(fmt("missing row %g %s %s", param, method.c_str(), prior.c_str()));
}

void check_coverage(Checks& c, const std::vector<MetricsRow>& rows) {
  double worst = 0.0;
  std::string where;
  for (const auto& r : rows) {
    const double d = std::fabs(r.coverage - 0.9);
    if (d >= worst) {
      worst = d;
      where = r.param + " " + r.method + " " + r.prior + fmt(" %.3f", r.coverage);
    }
  }
  c.expect(worst <= 0.03, "worst coverage " + where + " within 0.90 +- 0.03");
}

Checks biased_study() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  const auto cfg = harness::load_config(std::string(FABPPI_CONFIG_DIR) + "/biased.json");
  const auto rows = harness::run_biased_study(cfg);
  const std::string hs = "horseshoe:sigma";
  const std::string gs = "gaussian:sigma";

  double cls_worst = 0.0, ppi_worst = 0.0, ppi_lo = INFINITY, ppi_hi = 0.0;
  for (double g : cfg.gamma_grid) {
    cls_worst = std::max(cls_worst, std::fabs(find_row(rows, g, "classical", "none").avg_volume / 0.3290 - 1.0));
    const double w = find_row(rows, g, "ppi", "none").avg_volume;
    ppi_worst = std::max(ppi_worst, std::fabs(w / 0.2326 - 1.0));
    ppi_lo = std::min(ppi_lo, w);
    ppi_hi = std::max(ppi_hi, w);
  }
  c.expect(cls_worst <= 0.03, fmt("classical width max rel dev %.4f <= 3%%", cls_worst));
  c.expect(ppi_worst <= 0.03, fmt("ppi width max rel dev %.4f <= 3%% (range %.4f..%.4f)", ppi_worst, ppi_lo, ppi_hi));

  for (auto [fab, base] : {std::pair<std::string, std::string>{"fab-ppi", "ppi"}, {"fab-ppi++", "ppi++"}}) {
    const double b0 = find_row(rows, 0.0, base, "none").avg_volume;
    const double h0 = find_row(rows, 0.0, fab, hs).avg_volume;
    c.expect(h0 < b0, fmt("%s hs at 0: %.4f < %.4f", fab.c_str(), h0, b0));
    for (double g : {-1.5, 1.5}) {
      const double b = find_row(rows, g, base, "none").avg_volume;
      const double h = find_row(rows, g, fab, hs).avg_volume;
      const double n = find_row(rows, g, fab, gs).avg_volume;
      c.expect(std::fabs(h / b - 1.0) <= 0.10, fmt("%s hs at %g: %.4f vs %.4f", fab.c_str(), g, h, b));
      c.expect(n > b, fmt("%s gauss at %g: %.4f > %.4f", fab.c_str(), g, n, b));
    }
  }
  check_coverage(c, rows);
  runtime(c, t0, 300.0);
  return c;
}

// --- 7 ---------------------------------------------------------------------

Checks noisy_study() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  const auto cfg = harness::load_config(std::string(FABPPI_CONFIG_DIR) + "/noisy.json");
  const auto rows = harness::run_noisy_study(cfg);
  const std::size_t n = cfg.n.front();
  const std::size_t big_n = *cfg.N;
  const double z = specfun::norm_quantile(0.95);
  for (double s : cfg.sigma_y_list) {
    // Replays the study's streams to recover the tuned lambda per repetition.
    double lam = 0.0;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      auto rng = harness::seed_stream(cfg.master_seed,
                                      {"noisy", {s, static_cast<double>(n), static_cast<double>(big_n)}}, rep);
      const auto l = harness::draw_noisy(rng, n, s);
      const auto u = UnlabelledSample::from_predictions(harness::draw_noisy_unlabelled(rng, big_n, s));
      lam += lambda_hat(l, u);
    }
    lam /= static_cast<double>(cfg.repetitions);
    const double lam_star = 1.0 / (1.0 + s * s);
    c.expect(std::fabs(lam - lam_star) <= 0.05, fmt("s=%g lambda mean %.4f vs %.4f", s, lam, lam_star));

    const double target = 2.0 * z * std::sqrt(1.0 - lam_star) / std::sqrt(static_cast<double>(n));
    const double pp = find_row(rows, s, "ppi++", "none").avg_volume;
    c.expect(std::fabs(pp / target - 1.0) <= 0.05, fmt("s=%g ppi++ width %.5f vs %.5f (%+.1f%%)", s, pp, target,
                                                       100.0 * (pp / target - 1.0)));
    const double fab = find_row(rows, s, "fab-ppi++", "horseshoe:sigma").avg_volume;
    c.expect(fab <= pp, fmt("s=%g fab-ppi++ hs %.5f <= %.5f", s, fab, pp));
  }
  check_coverage(c, rows);
  runtime(c, t0, 600.0);
  return c;
}

// --- 8 ---------------------------------------------------------------------

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Checks consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  const double delta = 1.0;
  const int reps = 200;
  std::vector<double> hs_med;
  double gauss_med = 0.0;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::vector<double> hs_err, g_err;
    for (int rep = 0; rep < reps; ++rep) {
      auto rng = harness::seed_stream(kSeed, {"consistency", {static_cast<double>(n), delta}}, rep);
      // E[Y] = 0 while the predictions carry bias delta; the prediction mean is known.
      const auto l = harness::draw_biased(rng, n, delta);
      const auto u = UnlabelledSample::analytic(delta, 1.0);
      const auto mode = DeltaRule::known_m();
      hs_err.push_back(std::fabs(fab_ppi_mean(l, u, PriorSpec::horseshoe(), 0.1, mode, false).point));
      g_err.push_back(std::fabs(fab_ppi_mean(l, u, PriorSpec::gaussian(), 0.1, mode, false).point));
    }
    hs_med.push_back(median(hs_err));
    gauss_med = median(g_err);
  }
  c.expect(hs_med[1] <= 0.5 * hs_med[0] && hs_med[2] <= 0.5 * hs_med[1],
           fmt("hs median error halves per decade: %.5f %.5f %.5f", hs_med[0], hs_med[1], hs_med[2]));
  c.expect(hs_med[2] < 0.02, fmt("hs median error at 1e5 %.5f < 0.02", hs_med[2]));
  c.expect(std::fabs(gauss_med - 0.5) <= 0.02, fmt("gauss median error at 1e5 %.5f = 0.50 +- 0.02", gauss_med));
  runtime(c, t0, 120.0);
  return c;
}

// --- 9 ---------------------------------------------------------------------

Checks multivariate() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  const std::vector<double> truth = {0.0, 3.0};
  const std::vector<double> sd = {1.0, 1.0};
  const int reps = 10000;
  int hit = 0;
  for (int rep = 0; rep < reps; ++rep) {
    auto rng = harness::seed_stream(kSeed, {"multivariate", truth}, rep);
    std::vector<double> est = {truth[0] + rng.normal(), truth[1] + rng.normal()};
    const auto regions = multivariate_fab_cr(est, sd, PriorSpec::horseshoe(), 0.1);
    hit += (regions[0].contains(truth[0]) && regions[1].contains(truth[1])) ? 1 : 0;
  }
  const double cov = static_cast<double>(hit) / reps;
  c.expect(cov >= 0.90, fmt("joint coverage %.4f >= 0.90", cov));
  runtime(c, t0, 120.0);
  return c;
}

// --- 10 --------------------------------------------------------------------

std::string csv_of(const harness::ExperimentConfig& cfg, std::size_t threads) {
  harness::RunOptions o;
  o.threads = threads;
  return harness::render(harness::run_study(cfg, o), harness::Format::Csv);
}

Checks determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  const std::vector<std::string> configs = {
      R"({"scenario": "biased", "n": [50, 200], "gamma_grid": [0, 1.5], "repetitions": 60,
          "methods": ["classical", "ppi", "ppi++", "fab-ppi", "fab-ppi++:gaussian"]})",
      R"({"scenario": "noisy", "n": 100, "N": 3000, "sigma_y_list": [0.5, 2], "repetitions": 60,
          "methods": ["classical", "ppi++", "fab-ppi++"], "delta_rule": "full"})",
      R"({"scenario": "noisy", "n": 100, "N": 2000, "sigma_y_list": [1], "repetitions": 30,
          "target": "median", "methods": ["classical", "ppi", "fab-ppi++"], "theta_grid": [-2, 2, 401]})"};
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto cfg = harness::parse_config(configs[i]);
    const std::string a = csv_of(cfg, 1);
    const std::string b = csv_of(cfg, 1);
    const std::string p = csv_of(cfg, 4);
    c.expect(a == b, fmt("config %zu repeat identical", i));
    c.expect(a == p, fmt("config %zu 1 vs 4 threads identical", i));
  }
  runtime(c, t0, 600.0);
  return c;
}

// --- D ---------------------------------------------------------------------

Checks dataset_self_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks c;
  const std::size_t n = 400;
  const std::size_t big_n = 20000;
  auto rng = harness::seed_stream(kSeed, {"dataset-oracle", {1.0}}, 0);
  const auto pop = harness::draw_noisy(rng, n + big_n, 1.0);
  const auto dir = std::filesystem::temp_directory_path() / "fabppi_acceptance";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "noisy1.csv").string();
  harness::write_dataset_csv({pop.y, pop.fx}, path);

  const std::string methods = R"("methods": ["classical", "ppi", "ppi++", "fab-ppi++"], "repetitions": 1000)";
  auto dcfg = harness::parse_config(R"({"scenario": "dataset", "dataset_path": "x.csv", "n": 400, )" + methods + "}");
  dcfg.dataset_path = path;
  const auto ncfg = harness::parse_config(R"({"scenario": "noisy", "n": 400, "N": 20000, "sigma_y_list": [1], )" +
                                          methods + "}");
  const auto drows = harness::run_dataset_study(dcfg);
  const auto nrows = harness::run_noisy_study(ncfg);
  for (std::size_t i = 0; i < drows.size(); ++i) {
    const auto& d = drows[i];
    const auto& r = nrows[i];
    c.expect(d.method == r.method && d.N == r.N, "rows aligned: " + d.method);
    c.expect(std::fabs(d.avg_volume / r.avg_volume - 1.0) <= 0.05,
             fmt("%s width %.5f vs %.5f", d.method.c_str(), d.avg_volume, r.avg_volume));
    c.expect(std::fabs(d.mse / r.mse - 1.0) <= 0.20, fmt("%s mse %.3e vs %.3e", d.method.c_str(), d.mse, r.mse));
    c.expect(std::fabs(d.coverage - r.coverage) <= 0.05 && std::fabs(d.coverage - 0.9) <= 0.03,
             fmt("%s coverage %.3f vs %.3f", d.method.c_str(), d.coverage, r.coverage));
  }
  runtime(c, t0, 600.0);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::pair<std::string, std::function<Checks()>>>> criteria = {
      {"1", {"special-function oracles", special_functions}},
      {"2", {"horseshoe marginal cross-oracle", horseshoe_marginal}},
      {"3", {"exact FAB coverage", exact_coverage}},
      {"4", {"horseshoe reversion", reversion}},
      {"5", {"gaussian-prior volume growth", gaussian_pathology}},
      {"6", {"biased study", biased_study}},
      {"7", {"noisy study", noisy_study}},
      {"8", {"consistency dichotomy", consistency}},
      {"9", {"multivariate union-bound coverage", multivariate}},
      {"10", {"determinism", determinism}},
      {"D", {"dataset self-consistency", dataset_self_consistency}},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [id, entry] : criteria) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    bool ok = false;
    std::string detail;
    try {
      const Checks c = entry.second();
      ok = c.ok();
      detail = c.summary();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s [%s] %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), entry.first.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
