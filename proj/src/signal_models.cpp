#include "dualrate/signal_models.hpp"

#include "dualrate/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace dualrate {
namespace {

constexpr double kPi = std::numbers::pi;

Aberration closed(double amplitude, double frequency, double center, double lo, double hi) {
  return {amplitude, frequency, center, {lo, hi}, WindowConvention::closed};
}

Aberration left_open(double amplitude, double frequency, double center, double lo, double hi) {
  return {amplitude, frequency, center, {lo, hi}, WindowConvention::left_open};
}

// Four aberrations at the same window layout with per-window amplitude and frequency.
std::vector<Aberration> quartet(const std::array<double, 4>& amplitude,
                                const std::array<double, 4>& frequency,
                                const std::array<double, 4>& center) {
  std::vector<Aberration> out;
  for (std::size_t k = 0; k < 4; ++k) {
    out.push_back(closed(amplitude[k], frequency[k], center[k], center[k] - 2.0, center[k] + 2.0));
  }
  return out;
}

bool in_left_open(double t, double lo, double hi) { return lo < t && t <= hi; }

double g5_base(double t) {
  if (0.0 <= t && t <= 20.0) return std::log(1.0 + 0.1 * t);
  if (in_left_open(t, 20.0, 40.0)) return std::exp(0.1 * (t - 20.0)) - 1.0;
  if (in_left_open(t, 40.0, 60.0)) return std::log(1.0 + 0.1 * (t - 40.0));
  if (in_left_open(t, 60.0, 80.0)) return std::exp(-0.2 * (t - 60.0));
  if (80.0 < t && t < 100.0) return 0.5 * std::log(1.0 + 0.05 * (t - 80.0));
  return 0.0;
}

double g6_base(double t) {
  if (in_left_open(t, 20.0, 40.0)) return 1.0;
  if (in_left_open(t, 40.0, 60.0)) return 4.0;
  if (in_left_open(t, 60.0, 80.0)) return 6.0;
  if (in_left_open(t, 80.0, 90.0)) return 5.0;
  return 0.0;
}

}  // namespace

bool Aberration::active(double t) const {
  if (convention == WindowConvention::closed) return window.lo <= t && t <= window.hi;
  return window.lo < t && t <= window.hi;
}

double Aberration::operator()(double t) const {
  return active(t) ? amplitude * std::sin(frequency * (t - center)) : 0.0;
}

std::vector<Interval> SignalSpec::windows() const {
  std::vector<Interval> out;
  out.reserve(aberrations.size());
  for (const auto& a : aberrations) out.push_back(a.window);
  return out;
}

const std::vector<std::string>& signal_names() {
  static const std::vector<std::string> names{"g1", "g2", "g3", "g4", "g5", "g6", "base"};
  return names;
}

SignalSpec base_sinusoid() {
  SignalSpec spec;
  spec.name = "base";
  return spec;
}

SignalSpec make_signal(const std::string& name) {
  SignalSpec spec = base_sinusoid();
  spec.name = name;
  const double f8 = 8.0 * kPi;
  if (name == "base") {
    // no aberrations
  } else if (name == "g1") {
    spec.aberrations = quartet({0.2525, 0.5050, 0.7575, 1.1}, {f8, f8, f8, f8}, {24, 42, 58, 75});
  } else if (name == "g2") {
    spec.aberrations = quartet({0.35, 0.35, 0.35, 0.35}, {2 * kPi, 4 * kPi, 6 * kPi, f8},
                               {24, 42, 58, 75});
  } else if (name == "g3") {
    spec.aberrations = quartet({0.2525, 0.5050, 0.7575, 1.1}, {f8, f8, f8, f8}, {32, 51, 67, 84});
  } else if (name == "g4") {
    // The first term is printed with a sigma in place of sin; all siblings are sines.
    spec.aberrations = quartet({0.35, 0.35, 0.35, 0.35}, {2 * kPi, 4 * kPi, 6 * kPi, f8},
                               {32, 51, 67, 84});
  } else if (name == "g5") {
    spec.base = BaseComponent::log_exp;
    spec.aberrations = {
        left_open(1.0, 9.0, 16.0, 15.0, 17.0), left_open(1.0, 8.0, 38.0, 37.0, 39.0),
        left_open(1.0, 7.3, 41.0, 40.0, 42.0), left_open(1.0, 9.0, 61.0, 60.0, 62.0),
        left_open(1.0, 9.0, 81.0, 80.0, 82.0),
    };
  } else if (name == "g6") {
    spec.base = BaseComponent::blocks;
    spec.aberrations = {
        left_open(1.0, 9.0, 16.0, 15.0, 17.0), left_open(1.0, 9.0, 42.0, 41.0, 43.0),
        left_open(1.0, 9.0, 61.0, 60.0, 63.0), left_open(1.0, 9.0, 89.0, 88.0, 90.0),
    };
  } else {
    throw Error(ErrorCategory::validation, "unknown signal '" + name + "' (expected g1..g6 or base)");
  }
  validate_signal(spec);
  return spec;
}

double eval_base(const SignalSpec& spec, double t) {
  switch (spec.base) {
    case BaseComponent::sinusoid: return spec.amplitude * std::sin(spec.frequency * t);
    case BaseComponent::log_exp: return g5_base(t);
    case BaseComponent::blocks: return g6_base(t);
  }
  return 0.0;
}

double eval_signal(const SignalSpec& spec, double t) {
  double value = eval_base(spec, t);
  for (const auto& a : spec.aberrations) value += a(t);
  return value;
}

double draw_sample(const SignalSpec& spec, const NoiseModel& model, double t,
                   NormalStream& noise) {
  const double eps = noise.next();
  return eval_signal(spec, t) + model.sigma * eps;
}

void validate_signal(const SignalSpec& spec) {
  auto windows = spec.windows();
  for (const auto& w : windows) {
    if (!(w.lo < w.hi)) {
      throw Error(ErrorCategory::validation, "aberration window must satisfy lo < hi");
    }
    if (w.lo < spec.interval.lo || w.hi > spec.interval.hi) {
      throw Error(ErrorCategory::validation, "aberration window leaves the observation interval");
    }
  }
  std::sort(windows.begin(), windows.end(),
            [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  for (std::size_t k = 1; k < windows.size(); ++k) {
    if (windows[k].lo < windows[k - 1].hi) {
      throw Error(ErrorCategory::validation, "aberration windows overlap");
    }
  }
}

}  // namespace dualrate
