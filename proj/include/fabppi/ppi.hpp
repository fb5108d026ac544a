#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fabppi/fabcr.hpp"
#include "fabppi/priors.hpp"

namespace fabppi {

struct LabelledSample {
  std::vector<double> y;
  std::vector<double> fx;
  std::size_t n() const { return y.size(); }
};

// Predictions on unlabelled inputs, or just their known mean ("N infinite").
class UnlabelledSample {
 public:
  static UnlabelledSample from_predictions(std::vector<double> fx);
  static UnlabelledSample analytic(double mean, double sd);

  bool is_analytic() const { return analytic_; }
  const std::vector<double>& fx() const { return fx_; }
  std::size_t size() const { return fx_.size(); }
  double analytic_mean() const { return mean_; }
  double analytic_sd() const { return sd_; }

 private:
  bool analytic_ = false;
  std::vector<double> fx_;
  double mean_ = 0.0;
  double sd_ = 0.0;
};

struct RectifierStats {
  double m_hat;        // prediction mean on unlabelled data
  double delta_hat;
  double sigma_hat;    // sd of delta_hat
  double sigma_f_hat;  // sd of m_hat
  double lambda;
  double xi_hat;
  double sigma_xi;     // sample sd of lambda*f(X) - Y
};

enum class Method { Classical, PPI, PPIpp, FABPPI, FABPPIpp };
std::string method_id(Method m);
Method parse_method(const std::string& id);
bool is_fab(Method m);
bool is_power_tuned(Method m);

// KnownM: delta = alpha and the measure of fit is treated as known.
// Full: Minkowski split with delta (default alpha / 2).
struct DeltaRule {
  enum class Kind { KnownM, Full };
  Kind kind = Kind::KnownM;
  std::optional<double> delta;

  static DeltaRule known_m() { return {Kind::KnownM, std::nullopt}; }
  static DeltaRule full(std::optional<double> delta = std::nullopt) { return {Kind::Full, delta}; }
  double resolve(double alpha) const;
  std::string label() const;
};

struct EstimateReport {
  Method method = Method::Classical;
  std::optional<PriorSpec> prior;
  double point = 0.0;
  ConfidenceRegion region;
  double alpha = 0.1;
  double delta = 0.1;
  std::map<std::string, double> diagnostics;
};

EstimateReport classical_mean(const LabelledSample& labelled, double alpha);

double lambda_hat(const LabelledSample& labelled, const UnlabelledSample& unlabelled);

RectifierStats rectifier_stats(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                               double lambda);

// forced_lambda overrides both lambda = 1 and the tuned value.
EstimateReport ppi_mean(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                        double alpha, bool power_tuned, const DeltaRule& mode,
                        std::optional<double> forced_lambda = std::nullopt);

EstimateReport fab_ppi_mean(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                            const PriorSpec& prior, double alpha, const DeltaRule& mode,
                            bool power_tuned, std::optional<double> forced_lambda = std::nullopt);

// Subgradient of a covariate-free loss, L'_theta(y).
struct LossModel {
  std::string name;
  std::function<double(double theta, double y)> gradient;

  static LossModel squared();
  static LossModel pinball(double q);
};

struct ThetaGrid {
  double lo;
  double hi;
  std::size_t count = 2001;
  double at(std::size_t i) const;
  double step() const;
};

EstimateReport classical_convex(const LabelledSample& labelled, const LossModel& loss,
                                double alpha, const ThetaGrid& grid);

EstimateReport ppi_convex(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                          const LossModel& loss, double alpha, const DeltaRule& mode,
                          bool power_tuned, const ThetaGrid& grid);

EstimateReport fab_ppi_convex(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                              const LossModel& loss, const PriorSpec& prior, double alpha,
                              const DeltaRule& mode, bool power_tuned, const ThetaGrid& grid);

// Per-dimension FAB regions at level delta / d; the joint region is their product.
std::vector<ConfidenceRegion> multivariate_fab_cr(const std::vector<double>& delta_hats,
                                                  const std::vector<double>& sigma_hats,
                                                  const PriorSpec& prior, double delta,
                                                  std::size_t n = 0);

Interval odds_ratio_ci(const Interval& ci0, const Interval& ci1);

EstimateReport control_variate_mean(const std::vector<double>& z, const std::vector<double>& y,
                                    double mu, std::optional<double> lambda, double alpha);

namespace stats {
double mean(const std::vector<double>& v);
// Sample variance, n - 1 divisor.
double variance(const std::vector<double>& v);
}  // namespace stats

}  // namespace fabppi
