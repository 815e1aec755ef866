#pragma once

#include "dualrate/acquisition_controller.hpp"
#include "dualrate/signal_models.hpp"
#include "dualrate/wavelet_basis.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualrate {

struct ExperimentConfig {
  std::string signal = "g1";
  Interval interval{0.0, 100.0};
  RateConfig rate;
  NoiseModel noise;
  // Fixes the sigma used in the thresholds instead of estimating it from the
  // calibration prefix. Noiseless runs need this.
  std::optional<double> threshold_sigma;
  int replications = 500;
  std::uint64_t seed = 20240601;
  double calibration_fraction = 0.05;
  // Empty selects the aberration windows of the signal.
  std::vector<Interval> windows;
  int order = 5;         // Daubechies order r
  int table_depth = 12;  // cascade grid 2^-depth
  // Estimator depth of the constant-rate companion. Zero selects q1.
  int constant_depth = 0;
  bool exclude_calibration = false;

  long cells() const;
  long calibration_cells() const;
  std::vector<Interval> resolved_windows(const SignalSpec& spec) const;
  int resolved_constant_depth() const { return constant_depth > 0 ? constant_depth : rate.q1; }

  /// Throws Error{validation}; the message starts with the offending key.
  void validate() const;
};

enum class SamplingMode { dual, constant };

std::string_view mode_name(SamplingMode mode);

/// Grid paths of one replication, kept only when asked for.
struct ReplicationPaths {
  Eigen::VectorXd t;
  Eigen::VectorXd g;
  Eigen::VectorXd ghat;
  Eigen::VectorXd y;         // observed datum at t, NaN where nothing was sampled
  Eigen::VectorXd rate_hz;   // acquisition rate in force at t
  std::optional<RateTrace> trace;
  std::vector<EstimatorSetting> settings;
};

struct ReplicationResult {
  SamplingMode mode = SamplingMode::dual;
  std::uint32_t replication = 0;
  double ise_full = 0.0;
  std::vector<double> ise_windows;
  double ise_pooled = 0.0;
  long samples = 0;
  double sigma_hat = 0.0;
  double pi = 0.0;
  double nu = 0.0;
  long upswitches = 0;  // after calibration
  std::optional<ReplicationPaths> paths;
};

/// Everything a replication needs that does not depend on the replication.
struct StudyContext {
  ExperimentConfig cfg;
  SignalSpec signal;
  WaveletTable table;
  std::vector<Interval> windows;

  static StudyContext make(const ExperimentConfig& cfg);
};

/// Trapezoid integral at step xi of (ghat - g)^2 over `region`; both vectors
/// hold values at m xi, m = 0..n-1. The region must lie on the grid.
double ise(const Eigen::VectorXd& ghat, const Eigen::VectorXd& g, double xi, const Interval& region);

/// `count` is the sample budget for SamplingMode::constant and ignored otherwise.
ReplicationResult run_replication(const StudyContext& ctx, std::uint32_t replication,
                                  SamplingMode mode, long count = 0, bool keep_paths = false);

struct MiseEstimate {
  double mise = 0.0;
  double mc_stderr = 0.0;
};

/// Mean and standard error, summed in index order.
MiseEstimate summarize(const std::vector<double>& values);

struct StudySummary {
  std::string signal;
  int replications = 0;
  MiseEstimate dual_full;
  MiseEstimate constant_full;
  MiseEstimate dual_pooled;
  MiseEstimate constant_pooled;
  std::vector<MiseEstimate> dual_windows;
  std::vector<MiseEstimate> constant_windows;
  std::uint32_t median_replication = 0;
  double mean_samples = 0.0;
  double mean_pi = 0.0;
  double mean_nu = 0.0;
  std::vector<ReplicationResult> dual;
  std::vector<ReplicationResult> constant;
};

/// Runs B dual replications, each with a budget-matched constant companion on
/// an independent substream. `jobs` worker threads; results do not depend on it.
StudySummary run_study(const ExperimentConfig& cfg, int jobs = 1);
StudySummary run_study(const StudyContext& ctx, int jobs = 1);

/// Index of the replication with the median full-interval dual ISE (lower
/// median; ties broken by index).
std::uint32_t median_index(const std::vector<ReplicationResult>& results);

}  // namespace dualrate
