#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fabppi/ppi.hpp"

namespace fabppi::harness {

// Philox4x32-10 keyed by a 64-bit stream id; block counter advances per draw.
class Rng {
 public:
  Rng(std::uint64_t key, std::uint64_t stream);
  std::uint64_t next_u64();
  double uniform();  // in (0, 1)
  double normal();
  std::uint64_t below(std::uint64_t bound);  // uniform on [0, bound)

 private:
  void refill();
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  std::optional<double> spare_;
};

// Canonical scenario parameters: a tag plus numbers, hashed bit-exactly.
struct StreamKey {
  std::string scenario;
  std::vector<double> params;
};

Rng seed_stream(std::uint64_t master_seed, const StreamKey& key, std::uint64_t rep_index);

enum class Scenario { Biased, Noisy, Dataset };

struct Target {
  enum class Kind { Mean, Quantile };
  Kind kind = Kind::Mean;
  double q = 0.5;
  std::string label() const;
};

struct MethodSpec {
  Method method = Method::Classical;
  std::optional<PriorSpec> prior;   // FAB methods only
  std::optional<DeltaRule> mode;    // falls back to the config's delta_rule
};

struct ExperimentConfig {
  Scenario scenario = Scenario::Biased;
  std::vector<std::size_t> n = {200};
  std::optional<std::size_t> N;  // empty means infinite
  std::vector<double> gamma_grid;
  std::vector<double> sigma_y_list;
  std::string dataset_path;
  Target target;
  std::vector<MethodSpec> methods;
  double alpha = 0.1;
  DeltaRule delta_rule = DeltaRule::known_m();
  std::size_t repetitions = 1000;
  std::uint64_t master_seed = 20240501;
  std::optional<ThetaGrid> theta_grid;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& cfg);

struct MetricsRow {
  std::string scenario;
  std::string param;
  std::size_t n = 0;
  std::optional<std::size_t> N;
  std::string method;
  std::string prior;
  std::string mode;
  double mse = 0.0;
  double avg_volume = 0.0;
  double coverage = 0.0;
  std::size_t reps = 0;
  double truth = 0.0;
};

struct RunOptions {
  std::size_t threads = 0;  // 0: FABPPI_THREADS, then hardware concurrency
  std::function<void(const std::string&)> warn;
};

std::size_t resolve_threads(std::size_t requested);

std::vector<MetricsRow> run_biased_study(const ExperimentConfig& cfg, const RunOptions& opts = {});
std::vector<MetricsRow> run_noisy_study(const ExperimentConfig& cfg, const RunOptions& opts = {});
std::vector<MetricsRow> run_dataset_study(const ExperimentConfig& cfg, const RunOptions& opts = {});
std::vector<MetricsRow> run_study(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Synthetic draws shared by the studies, exposed for tests.
LabelledSample draw_biased(Rng& rng, std::size_t n, double gamma);
LabelledSample draw_noisy(Rng& rng, std::size_t n, double sigma_y);
std::vector<double> draw_noisy_unlabelled(Rng& rng, std::size_t big_n, double sigma_y);

struct Dataset {
  std::vector<double> y;
  std::vector<double> f;
};
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const Dataset& data, const std::string& path);

// Evaluates one configured method on one sample.
EstimateReport run_method(const MethodSpec& spec, const DeltaRule& default_mode,
                          const Target& target, const LabelledSample& labelled,
                          const UnlabelledSample& unlabelled, double alpha,
                          const std::optional<ThetaGrid>& grid);

enum class Format { Csv, Json };
Format parse_format(const std::string& s);
std::string render(const std::vector<MetricsRow>& rows, Format format);
std::vector<MetricsRow> parse_rows_json(const std::string& text);
void emit(const std::vector<MetricsRow>& rows, Format format, const std::string& path);

}  // namespace fabppi::harness
