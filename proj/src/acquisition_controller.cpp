#include "dualrate/acquisition_controller.hpp"

#include "dualrate/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dualrate {
namespace {

constexpr double kBandSlack = 1e-9;

// Levels i with lo <= 2^i p <= 2^q p. A translate is read from `settled` when
// present there, else from `provisional`, else skipped.
template <typename Fn>
void for_each_band_coefficient(const CoefficientSet& settled, const CoefficientSet* provisional,
                               const WaveletTable& table, double band_lo, int q,
                               const Interval& span, Fn&& fn) {
  const double p = settled.primary_level();
  const double band_hi = std::ldexp(p, q);
  for (int i = 0; i <= q; ++i) {
    const double scale = std::ldexp(p, i);
    if (scale < band_lo * (1.0 - kBandSlack) || scale > band_hi * (1.0 + kBandSlack)) continue;
    const LevelCoefficients* a = i < settled.levels() ? &settled.detail(i) : nullptr;
    const LevelCoefficients* b =
        provisional && i < provisional->levels() ? &provisional->detail(i) : nullptr;
    if (!a && !b) continue;
    const auto [first, last] = translate_range(table, scale, span);
    for (long j = first; j <= last; ++j) {
      double value;
      if (a && a->contains(j)) {
        value = a->at(j);
      } else if (b && b->contains(j)) {
        value = b->at(j);
      } else {
        continue;
      }
      if (!fn(i, j, value)) return;
    }
  }
}

}  // namespace

void RateConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCategory::validation, what); };
  if (!(xi > 0.0)) fail("xi: must be positive");
  if (ell < 2) fail("ell: must be >= 2 for two distinct rates, got " + std::to_string(ell));
  if (!(C > 0.0)) fail("C: must be positive");
  if (!(p > 0.0)) fail("p: must be positive");
  if (q1 < 1) fail("q1: must be >= 1");
  if (q2 < 1) fail("q2: must be >= 1");
  if (!(pi1 > 0.0)) fail("pi1: must be positive");
  if (!(pi2 > 0.0)) fail("pi2: must be positive");
  if (dwell_steps < 0) fail("dwell_steps: must be >= 0");
  if (warmup_steps < 0) fail("warmup_steps: must be >= 0");
  if (lookback_steps < 0) fail("lookback_steps: must be >= 0");
  if (max_high_fraction && !(*max_high_fraction > 0.0 && *max_high_fraction <= 1.0)) {
    fail("max_high_fraction: must lie in (0, 1]");
  }
  if (!(rho1() > 1.0)) fail("ell: low rate 1/(ell xi) must exceed 1 for the threshold to be defined");
}

double threshold(double C, double sigma, double rho) {
  if (!(rho > 1.0)) {
    throw Error(ErrorCategory::validation,
                "threshold requires rho > 1, got " + std::to_string(rho));
  }
  if (!(C > 0.0)) throw Error(ErrorCategory::validation, "threshold requires C > 0");
  if (!(sigma >= 0.0)) throw Error(ErrorCategory::validation, "threshold requires sigma >= 0");
  return C * sigma * std::sqrt(std::log(rho) / rho);
}

long tau0_steps(double width, double p, int ell, double xi) {
  if (!(width > 0.0) || !(p > 0.0) || ell < 1 || !(xi > 0.0)) {
    throw Error(ErrorCategory::validation, "tau0 requires positive width, p, ell and xi");
  }
  const double blocks = std::ceil(width / (p * ell * xi) - 1e-9);
  return static_cast<long>(blocks) * ell;
}

double compute_tau0(double width, double p, int ell, double xi) {
  const long blocks = tau0_steps(width, p, ell, xi) / ell;
  return static_cast<double>(blocks) * (ell * xi);
}

long default_dwell_steps(double width, const RateConfig& cfg) {
  return static_cast<long>(std::ceil(width / (cfg.ell * cfg.xi * cfg.p) - 1e-9)) + 1;
}

std::string_view regime_name(Regime regime) {
  switch (regime) {
    case Regime::low: return "low";
    case Regime::high_warmup: return "high_warmup";
    case Regime::high: return "high";
  }
  return "unknown";
}

std::string_view decision_basis_name(DecisionBasis basis) {
  switch (basis) {
    case DecisionBasis::settled: return "settled";
    case DecisionBasis::hold: return "hold";
    case DecisionBasis::zero: return "zero";
  }
  return "unknown";
}

DecisionBasis parse_decision_basis(const std::string& name) {
  if (name == "settled") return DecisionBasis::settled;
  if (name == "hold") return DecisionBasis::hold;
  if (name == "zero") return DecisionBasis::zero;
  throw Error(ErrorCategory::validation,
              "decision: expected settled, hold or zero, got '" + name + "'");
}

long RateTrace::upswitches() const {
  return std::count_if(transitions.begin(), transitions.end(), [](const Transition& tr) {
    return tr.from == Regime::low && is_high_rate(tr.to);
  });
}

ControllerState ControllerState::after_calibration(long steps, double xi) {
  ControllerState state;
  state.regime = Regime::high_warmup;
  state.entered_step = 0;
  state.high_since_step = 0;
  state.next_step = steps;
  state.checked_until = steps;
  state.high_steps = steps;
  state.trace.xi = xi;
  state.trace.regimes.assign(static_cast<std::size_t>(steps), Regime::high_warmup);
  state.trace.sampled.assign(static_cast<std::size_t>(steps), true);
  return state;
}

ControllerState ControllerState::starting_low(double xi) {
  ControllerState state;
  state.trace.xi = xi;
  return state;
}

std::optional<Witness> upswitch_witness(const CoefficientSet& coeffs, const WaveletTable& table,
                                        const RateConfig& cfg, double delta1, const Interval& span,
                                        const CoefficientSet* provisional) {
  std::optional<Witness> best;
  for_each_band_coefficient(coeffs, provisional, table, cfg.pi1, cfg.q1, span, [&](int i, long j, double b) {
    if (std::abs(b) > delta1 && (!best || std::abs(b) > std::abs(best->coefficient))) {
      best = Witness{i, j, b};
    }
    return true;
  });
  return best;
}

bool upswitch_decision(const CoefficientSet& coeffs, const WaveletTable& table,
                       const RateConfig& cfg, double delta1, const Interval& span,
                       const CoefficientSet* provisional) {
  return upswitch_witness(coeffs, table, cfg, delta1, span, provisional).has_value();
}

bool downswitch_decision(const CoefficientSet& coeffs, const WaveletTable& table,
                         const RateConfig& cfg, double delta2, const Interval& span,
                         const CoefficientSet* provisional) {
  bool quiet = true;
  for_each_band_coefficient(coeffs, provisional, table, cfg.pi2, cfg.q2, span, [&](int, long, double b) {
    quiet = std::abs(b) <= delta2;
    return quiet;
  });
  return quiet;
}

AcquisitionController::AcquisitionController(const RateConfig& cfg, const WaveletTable& table,
                                             double sigma, ControllerState initial)
    : cfg_(cfg), table_(&table), state_(std::move(initial)) {
  cfg_.validate();
  delta1_ = threshold(cfg_.C, sigma, cfg_.rho1());
  delta2_ = threshold(cfg_.C, sigma, cfg_.rho2());
  tau0_steps_ = tau0_steps(table.width(), cfg_.p, cfg_.ell, cfg_.xi);
  warmup_steps_ = cfg_.warmup_steps > 0 ? cfg_.warmup_steps : tau0_steps_;
  dwell_steps_ = cfg_.dwell_steps > 0 ? cfg_.dwell_steps : default_dwell_steps(table.width(), cfg_);
  lookback_steps_ = cfg_.lookback_steps > 0 ? cfg_.lookback_steps : tau0_steps_;
  state_.trace.xi = cfg_.xi;
}

void AcquisitionController::enter(long k, Regime to, std::optional<Witness> witness,
                                  StepDecision& decision) {
  Transition tr{k, state_.regime, to, witness};
  if (state_.regime == Regime::low && is_high_rate(to)) state_.high_since_step = k;
  state_.regime = to;
  state_.entered_step = k;
  state_.trace.transitions.push_back(tr);
  decision.transition = tr;
}

StepDecision AcquisitionController::step(long k, const CoefficientSet& settled,
                                        const CoefficientSet* provisional) {
  if (k != state_.next_step) {
    throw Error(ErrorCategory::sequencing, "controller expected step " +
                                               std::to_string(state_.next_step) + ", got " +
                                               std::to_string(k));
  }
  StepDecision decision;
  const double xi = cfg_.xi;
  const double t = static_cast<double>(k) * xi;

  if (state_.regime == Regime::low) {
    if (k % cfg_.ell == 0) {
      const Interval span{static_cast<double>(state_.checked_until) * xi, t};
      auto witness = upswitch_witness(settled, *table_, cfg_, delta1_, span, provisional);
      state_.checked_until = k;
      if (witness) enter(k, Regime::high_warmup, witness, decision);
    }
  } else {
    const long at_high = k - state_.high_since_step;
    if (state_.regime == Regime::high_warmup && at_high >= warmup_steps_) {
      enter(k, Regime::high, std::nullopt, decision);
    }
    const bool over_budget =
        cfg_.max_high_fraction && k > 0 &&
        static_cast<double>(state_.high_steps) > *cfg_.max_high_fraction * static_cast<double>(k);
    if (over_budget) {
      enter(k, Regime::low, std::nullopt, decision);
      state_.checked_until = k;
    } else if (at_high >= dwell_steps_) {
      const Interval span{static_cast<double>(k - lookback_steps_) * xi, t};
      if (downswitch_decision(settled, *table_, cfg_, delta2_, span, provisional)) {
        enter(k, Regime::low, std::nullopt, decision);
        state_.checked_until = k;
      }
    }
  }

  decision.sample = state_.regime != Regime::low || k % cfg_.ell == 0;
  if (is_high_rate(state_.regime)) ++state_.high_steps;
  state_.trace.regimes.push_back(state_.regime);
  state_.trace.sampled.push_back(decision.sample);
  state_.next_step = k + 1;
  return decision;
}

bool AcquisitionController::checks_at(long k) const {
  if (state_.regime == Regime::low) return k % cfg_.ell == 0;
  return k - state_.high_since_step >= dwell_steps_;
}

EstimatorSetting AcquisitionController::setting_at(long k) const {
  const auto& regimes = state_.trace.regimes;
  Regime regime = state_.regime;
  if (!regimes.empty()) {
    const auto idx = static_cast<std::size_t>(std::clamp(k, 0L, static_cast<long>(regimes.size()) - 1));
    regime = regimes[idx];
  }
  if (regime == Regime::high) return {cfg_.q2, delta2_};
  return {cfg_.q1, delta1_};
}

double budget_rate(double rho1, double rho2, double pi) { return rho1 * (1.0 - pi) + rho2 * pi; }

LongRunRate long_run_rate(const RateTrace& trace, double rho1, double rho2) {
  if (trace.regimes.empty()) throw Error(ErrorCategory::validation, "empty rate trace");
  const auto high = std::count_if(trace.regimes.begin(), trace.regimes.end(), is_high_rate);
  LongRunRate out;
  out.pi = static_cast<double>(high) / static_cast<double>(trace.regimes.size());
  out.nu = budget_rate(rho1, rho2, out.pi);
  out.samples = std::count(trace.sampled.begin(), trace.sampled.end(), true);
  return out;
}

}  // namespace dualrate
