#pragma once

// Monte-Carlo experiment orchestration: presets, trial execution and the
// summary / manifest writers behind the command-line tool.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "avsdoa/metrics.hpp"
#include "avsdoa/sim.hpp"

namespace avsdoa {

inline constexpr const char* kVersion = "0.1.0";

enum class Estimator { EJD, CPD, KLD };
enum class SweepAxis { Samples, SnrDb };

std::string to_string(Estimator e);
std::string to_string(SweepAxis a);
Estimator parse_estimator(const std::string& s);
SweepAxis parse_axis(const std::string& s);
/// Comma-separated list such as "ejd,cpd,kld"; duplicates are dropped.
std::vector<Estimator> parse_estimator_list(const std::string& s);

struct ExperimentConfig {
  std::string name = "custom";
  ArrayScenario array;
  std::vector<double> doa_deg;
  SourceKind source = SourceKind::CircularComplexNormal;
  NoiseKind noise = NoiseKind::CircularComplexNormal;
  /// Draw per-sensor gains and position offsets once, from calibration_seed.
  bool calibration_errors = false;
  std::uint64_t calibration_seed = 1;
  SweepAxis axis = SweepAxis::Samples;
  std::vector<double> sweep;
  int samples = 100;    ///< T when sweeping SNR
  double snr_db = 10.0; ///< SNR when sweeping T
  int trials = 200;
  std::uint64_t seed = 1;
  std::vector<Estimator> estimators{Estimator::EJD, Estimator::CPD, Estimator::KLD};
  int threads = 1;
  std::string out_dir = "out";

  void validate() const;
  bool has(Estimator e) const;
};

/// fig1a, fig1b, fig2, fig3 or fig4.
ExperimentConfig preset(const std::string& id);
std::vector<std::string> preset_names();

/// Faulty sensor indices are 1-based in JSON and 0-based in ArrayScenario.
nlohmann::json to_json(const ExperimentConfig& c);
/// Accepts a config object or a run manifest carrying one under "config".
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// sigma^2 = 10^(-SNR/10) under unit-power sources.
double noise_variance_for_snr(double snr_db);

struct SummaryRow {
  SweepAxis axis = SweepAxis::Samples;
  double axis_value = 0.0;
  int doa_index = 0;
  Estimator estimator = Estimator::KLD;
  RmseSummary stats;  ///< NaN fields when every trial failed
  double crlb_sqrt_rad = 0.0;
  int trials = 0;
  int failures = 0;
};

struct IsrRow {
  SweepAxis axis = SweepAxis::Samples;
  double axis_value = 0.0;
  Estimator estimator = Estimator::KLD;
  int i = 0;
  int j = 0;
  double mean = 0.0;
  double std = 0.0;
  int trials = 0;
  int failures = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SummaryRow> summary;
  std::vector<IsrRow> isr;
  /// Ordered by sweep point, trial, then estimator.
  std::vector<TrialRecord> records;
  std::vector<RVector> crlb_sqrt;  ///< per sweep point, per DOA
  double wall_seconds = 0.0;

  const SummaryRow& row(double axis_value, int doa_index, Estimator e) const;
  const IsrRow& isr_row(double axis_value, Estimator e, int i, int j) const;
};

/// Scenario with calibration errors drawn, as used by every trial.
ArrayScenario realized_array(const ExperimentConfig& c);

ExperimentResult run_experiment(const ExperimentConfig& c);

inline constexpr const char* kSummaryHeader =
    "axis,axis_value,doa_index,estimator,rmse_rad,rmse_deg,std_env,crlb_sqrt_rad,trials,failures";
inline constexpr const char* kIsrHeader = "axis,axis_value,estimator,i,j,isr_mean,isr_std,trials,failures";
inline constexpr const char* kTrialsHeader = "axis,axis_value,trial,estimator,doa_index,error_rad,failed";

std::string summary_csv(const ExperimentResult& r);
std::string isr_csv(const ExperimentResult& r);
std::string trials_csv(const ExperimentResult& r);
nlohmann::json manifest(const ExperimentResult& r);

/// Writes summary.csv, isr.csv, trials.csv and run.json into out_dir.
void emit(const ExperimentResult& r, const std::string& out_dir);

}  // namespace avsdoa
