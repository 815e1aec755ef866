#pragma once

#include "dualrate/estimator.hpp"
#include "dualrate/wavelet_basis.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dualrate {

/// Which coefficients the switching rules see at time t.
enum class DecisionBasis {
  settled,  // only coefficients whose support lies before t
  hold,     // plus those straddling t, with the last datum carried forward
  zero,     // plus those straddling t, with Z^t zero beyond t
};

/// Tuning of the dual-rate sampler. Rates are samples per time unit.
struct RateConfig {
  double xi = 0.01;
  int ell = 6;
  double C = 2.0;
  double p = 1.0;
  int q1 = 4;
  int q2 = 5;
  double pi1 = 2.0;
  double pi2 = 3.0;
  // Earliest downswitch scan after entering the high rate, in grid steps.
  // Zero selects the default ceil((b-a) / (ell xi p)) + 1.
  long dwell_steps = 0;
  // Steps at the high rate before (q2, delta2) take effect. Zero selects tau0.
  // One step reproduces the reference tables far better than tau0 does.
  long warmup_steps = 1;
  // Length of the downswitch look-back window in grid steps. Zero selects tau0.
  long lookback_steps = 1;
  DecisionBasis decision = DecisionBasis::hold;
  // Optional cap on the running fraction of time spent at the high rate.
  std::optional<double> max_high_fraction;

  double rho1() const { return 1.0 / (ell * xi); }
  double rho2() const { return 1.0 / xi; }

  /// Throws Error{validation} on an inconsistent configuration.
  void validate() const;
};

/// delta = C sigma sqrt(log(rho) / rho), natural log. Requires rho > 1.
double threshold(double C, double sigma, double rho);

/// Least multiple of ell * xi that is >= width / p.
double compute_tau0(double width, double p, int ell, double xi);

/// compute_tau0 expressed in grid steps.
long tau0_steps(double width, double p, int ell, double xi);

long default_dwell_steps(double width, const RateConfig& cfg);

enum class Regime { low, high_warmup, high };

std::string_view regime_name(Regime regime);
std::string_view decision_basis_name(DecisionBasis basis);
DecisionBasis parse_decision_basis(const std::string& name);
inline bool is_high_rate(Regime regime) { return regime != Regime::low; }

/// Coefficient that justified an upswitch.
struct Witness {
  int level = 0;
  long translate = 0;
  double coefficient = 0.0;
};

struct Transition {
  long step = 0;
  Regime from = Regime::low;
  Regime to = Regime::low;
  std::optional<Witness> witness;
};

/// Per-step regime and sampling record plus every regime change.
struct RateTrace {
  double xi = 0.01;
  std::vector<Regime> regimes;
  std::vector<bool> sampled;
  std::vector<Transition> transitions;

  long steps() const { return static_cast<long>(regimes.size()); }
  long upswitches() const;
};

struct ControllerState {
  Regime regime = Regime::low;
  long entered_step = 0;       // step at which the current regime began
  long high_since_step = 0;    // start of the current run at rate rho2
  long next_step = 0;          // next step step() expects
  long checked_until = 0;      // coefficients ending before this step were scanned by the upswitch rule
  long high_steps = 0;         // steps spent at rate rho2 so far
  RateTrace trace;

  /// State after `steps` calibration steps sampled at the high rate.
  static ControllerState after_calibration(long steps, double xi);
  /// State at step 0 at the low rate.
  static ControllerState starting_low(double xi);
};

/// Upswitch rule: some coefficient at a level with pi1 <= p_i <= p_{q1}, whose support
/// meets `span`, exceeds delta1 in magnitude.
std::optional<Witness> upswitch_witness(const CoefficientSet& coeffs, const WaveletTable& table,
                                        const RateConfig& cfg, double delta1, const Interval& span,
                                        const CoefficientSet* provisional = nullptr);

bool upswitch_decision(const CoefficientSet& coeffs, const WaveletTable& table,
                       const RateConfig& cfg, double delta1, const Interval& span,
                       const CoefficientSet* provisional = nullptr);

/// Downswitch rule: every coefficient at a level with pi2 <= p_i <= p_{q2}, whose support
/// meets `span`, is at most delta2 in magnitude.
bool downswitch_decision(const CoefficientSet& coeffs, const WaveletTable& table,
                         const RateConfig& cfg, double delta2, const Interval& span,
                         const CoefficientSet* provisional = nullptr);

struct StepDecision {
  bool sample = false;
  std::optional<Transition> transition;
};

/// Online dual-rate state machine. Called once per grid step, in order. At
/// step k the decision coefficients are those settled from data in cells < k.
class AcquisitionController {
 public:
  AcquisitionController(const RateConfig& cfg, const WaveletTable& table, double sigma,
                        ControllerState initial);

  /// `provisional` optionally supplies coefficients still straddling t;
  /// translates present in `settled` take precedence.
  StepDecision step(long k, const CoefficientSet& settled,
                    const CoefficientSet* provisional = nullptr);

  const ControllerState& state() const { return state_; }
  const RateTrace& trace() const { return state_.trace; }
  const RateConfig& config() const { return cfg_; }

  double delta_low() const { return delta1_; }
  double delta_high() const { return delta2_; }
  long tau0() const { return tau0_steps_; }
  long warmup() const { return warmup_steps_; }
  long dwell() const { return dwell_steps_; }
  long lookback() const { return lookback_steps_; }

  /// True when step(k) would apply the upswitch or downswitch rule.
  bool checks_at(long k) const;

  /// (q, delta) in force at step k: (q2, delta2) in Regime::high, else (q1, delta1).
  EstimatorSetting setting_at(long k) const;

 private:
  void enter(long k, Regime to, std::optional<Witness> witness, StepDecision& decision);

  RateConfig cfg_;
  const WaveletTable* table_;
  double delta1_;
  double delta2_;
  long tau0_steps_;
  long warmup_steps_;
  long dwell_steps_;
  long lookback_steps_;
  ControllerState state_;
};

struct LongRunRate {
  double nu = 0.0;        // rho1 (1 - Pi) + rho2 Pi
  double pi = 0.0;        // fraction of time at rho2
  long samples = 0;       // realised sample count
};

/// nu = rho1 (1 - Pi) + rho2 Pi.
double budget_rate(double rho1, double rho2, double pi);

/// Throws Error{validation} on an empty trace.
LongRunRate long_run_rate(const RateTrace& trace, double rho1, double rho2);

}  // namespace dualrate
