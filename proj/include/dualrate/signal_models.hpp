#pragma once

#include "dualrate/random.hpp"
#include "dualrate/wavelet_basis.hpp"

#include <string>
#include <vector>

namespace dualrate {

enum class WindowConvention {
  closed,     // [lo, hi]
  left_open,  // (lo, hi]
};

/// amplitude * sin(frequency * (t - center)) on the window, zero elsewhere.
struct Aberration {
  double amplitude = 0.0;
  double frequency = 0.0;  // rad per time unit
  double center = 0.0;
  Interval window;
  WindowConvention convention = WindowConvention::closed;

  bool active(double t) const;
  double operator()(double t) const;
};

enum class BaseComponent {
  sinusoid,   // 2.4 sin(0.06 pi t)
  log_exp,    // piecewise log/exp segments with jumps (g5)
  blocks,     // piecewise constant blocks (g6)
};

struct SignalSpec {
  std::string name;
  BaseComponent base = BaseComponent::sinusoid;
  double amplitude = 2.4;
  double frequency = 0.06 * 3.14159265358979323846;
  std::vector<Aberration> aberrations;
  Interval interval{0.0, 100.0};

  std::vector<Interval> windows() const;
};

struct NoiseModel {
  double sigma = 0.15;
};

/// Names accepted by make_signal, in canonical order.
const std::vector<std::string>& signal_names();

/// Test signal g1..g6. Throws Error{validation} for an unknown name.
SignalSpec make_signal(const std::string& name);

/// The smooth base of the g1..g4 family without any aberration.
SignalSpec base_sinusoid();

double eval_base(const SignalSpec& spec, double t);
double eval_signal(const SignalSpec& spec, double t);

/// g(t) + N(0, sigma^2); consumes exactly one variate from `noise`.
double draw_sample(const SignalSpec& spec, const NoiseModel& model, double t,
                   NormalStream& noise);

/// Throws Error{validation} if windows leave the interval or overlap.
void validate_signal(const SignalSpec& spec);

}  // namespace dualrate
