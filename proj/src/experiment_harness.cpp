#include "dualrate/experiment_harness.hpp"

#include "dualrate/error.hpp"
#include "dualrate/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace dualrate {
namespace {

constexpr double kGridSlack = 1e-9;

void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCategory::validation, key + ": " + what);
}

long grid_index(double t, double xi, const char* what) {
  const double ratio = t / xi;
  const double m = std::round(ratio);
  if (std::abs(ratio - m) > kGridSlack * std::max(1.0, std::abs(ratio))) {
    throw Error(ErrorCategory::validation,
                std::string(what) + " " + std::to_string(t) + " is not on the xi grid");
  }
  return static_cast<long>(m);
}

// Draws the calibration prefix on cells [0, calib) and returns sigma-hat from it.
double calibrate(const StudyContext& ctx, SampleStream& stream, NormalStream& noise, long calib) {
  const double xi = ctx.cfg.rate.xi;
  for (long k = 0; k < calib; ++k) {
    const double t = ctx.cfg.interval.lo + static_cast<double>(k) * xi;
    stream.push(k, draw_sample(ctx.signal, ctx.cfg.noise, t, noise));
  }
  if (ctx.cfg.threshold_sigma) return *ctx.cfg.threshold_sigma;
  return estimate_sigma(stream);
}

Eigen::VectorXd exact_on_grid(const StudyContext& ctx) {
  const long n = ctx.cfg.cells();
  Eigen::VectorXd g(n + 1);
  for (long m = 0; m <= n; ++m) {
    g[m] = eval_signal(ctx.signal, ctx.cfg.interval.lo + static_cast<double>(m) * ctx.cfg.rate.xi);
  }
  return g;
}

void score(const StudyContext& ctx, const Eigen::VectorXd& ghat, const Eigen::VectorXd& g,
           ReplicationResult& out) {
  const auto& cfg = ctx.cfg;
  const double xi = cfg.rate.xi;
  const double lo = cfg.interval.lo;
  auto shifted = [&](const Interval& w) { return Interval{w.lo - lo, w.hi - lo}; };
  Interval full = shifted(cfg.interval);
  if (cfg.exclude_calibration) full.lo = static_cast<double>(cfg.calibration_cells()) * xi;
  out.ise_full = ise(ghat, g, xi, full);
  out.ise_windows.clear();
  out.ise_pooled = 0.0;
  for (const auto& w : ctx.windows) {
    out.ise_windows.push_back(ise(ghat, g, xi, shifted(w)));
    out.ise_pooled += out.ise_windows.back();
  }
}

Eigen::VectorXd estimate(const StudyContext& ctx, const ImputedPath& path,
                         const std::vector<EstimatorSetting>& settings) {
  const auto& cfg = ctx.cfg;
  int levels = 1;
  for (const auto& s : settings) levels = std::max(levels, s.depth);
  const double span = cfg.interval.length();
  const auto coeffs = compute_coefficients(path, ctx.table, cfg.rate.p, levels, {0.0, span});
  return reconstruct_on_grid(coeffs, ctx.table, cfg.rate.xi, settings);
}

ReplicationResult run_dual(const StudyContext& ctx, std::uint32_t replication, bool keep) {
  const auto& cfg = ctx.cfg;
  const double xi = cfg.rate.xi;
  const long n = cfg.cells();
  const long calib = cfg.calibration_cells();

  SampleStream stream(xi);
  NormalStream noise(StreamId{cfg.seed, replication, 0});
  const double sigma_hat = calibrate(ctx, stream, noise, calib);

  AcquisitionController ctrl(cfg.rate, ctx.table, sigma_hat,
                             ControllerState::after_calibration(calib, xi));
  ImputedPath path(xi);
  // bands are inclusive at the top, so level q itself may be scanned
  const int levels = std::max(cfg.rate.q1, cfg.rate.q2) + 1;
  SettledCoefficients settled(ctx.table, cfg.rate.p, levels);
  for (long k = calib; k < n; ++k) {
    path.extend(stream, k);
    settled.advance(path);
    StepDecision decision;
    if (cfg.rate.decision != DecisionBasis::settled && ctrl.checks_at(k)) {
      const auto tail = cfg.rate.decision == DecisionBasis::hold ? TailExtension::hold
                                                                 : TailExtension::zero;
      const auto straddling = straddling_coefficients(path, ctx.table, cfg.rate.p, levels, tail);
      decision = ctrl.step(k, settled.coefficients(), &straddling);
    } else {
      decision = ctrl.step(k, settled.coefficients());
    }
    if (decision.sample) {
      const double t = cfg.interval.lo + static_cast<double>(k) * xi;
      stream.push(k, draw_sample(ctx.signal, cfg.noise, t, noise));
    }
  }
  path.extend(stream, n);

  std::vector<EstimatorSetting> settings(static_cast<std::size_t>(n + 1));
  for (long m = 0; m <= n; ++m) settings[static_cast<std::size_t>(m)] = ctrl.setting_at(m);
  const Eigen::VectorXd ghat = estimate(ctx, path, settings);
  const Eigen::VectorXd g = exact_on_grid(ctx);

  ReplicationResult out;
  out.mode = SamplingMode::dual;
  out.replication = replication;
  out.samples = static_cast<long>(stream.size());
  out.sigma_hat = sigma_hat;
  const auto budget = long_run_rate(ctrl.trace(), cfg.rate.rho1(), cfg.rate.rho2());
  out.pi = budget.pi;
  out.nu = budget.nu;
  out.upswitches = ctrl.trace().upswitches();
  score(ctx, ghat, g, out);

  if (keep) {
    ReplicationPaths paths;
    paths.t = Eigen::VectorXd::LinSpaced(n + 1, cfg.interval.lo, cfg.interval.hi);
    paths.g = g;
    paths.ghat = ghat;
    paths.y = Eigen::VectorXd::Constant(n + 1, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < stream.size(); ++i) paths.y[stream.cell(i)] = stream.value(i);
    paths.rate_hz.resize(n + 1);
    const auto& regimes = ctrl.trace().regimes;
    for (long m = 0; m <= n; ++m) {
      const auto r = regimes[static_cast<std::size_t>(std::min(m, n - 1))];
      paths.rate_hz[m] = is_high_rate(r) ? cfg.rate.rho2() : cfg.rate.rho1();
    }
    paths.trace = ctrl.trace();
    paths.settings = std::move(settings);
    out.paths = std::move(paths);
  }
  return out;
}

ReplicationResult run_constant(const StudyContext& ctx, std::uint32_t replication, long count,
                               bool keep) {
  const auto& cfg = ctx.cfg;
  const double xi = cfg.rate.xi;
  const long n = cfg.cells();
  const long calib = cfg.calibration_cells();
  if (count < calib || count > n) {
    throw Error(ErrorCategory::validation, "constant-rate budget " + std::to_string(count) +
                                               " outside [" + std::to_string(calib) + ", " +
                                               std::to_string(n) + "]");
  }

  SampleStream stream(xi);
  NormalStream noise(StreamId{cfg.seed, replication, 1});
  const double sigma_hat = calibrate(ctx, stream, noise, calib);

  // The remaining budget is spread evenly over cells [calib, n).
  const long rest = count - calib;
  for (long i = 0; i < rest; ++i) {
    const long k = calib + (i * (n - calib)) / rest;
    const double t = cfg.interval.lo + static_cast<double>(k) * xi;
    stream.push(k, draw_sample(ctx.signal, cfg.noise, t, noise));
  }
  ImputedPath path(xi);
  path.extend(stream, n);

  const double remaining = static_cast<double>(n - calib) * xi;
  const double rate = rest > 0 ? static_cast<double>(rest) / remaining : cfg.rate.rho2();
  const EstimatorSetting setting{cfg.resolved_constant_depth(),
                                 threshold(cfg.rate.C, sigma_hat, rate)};
  const std::vector<EstimatorSetting> settings(static_cast<std::size_t>(n + 1), setting);
  const Eigen::VectorXd ghat = estimate(ctx, path, settings);
  const Eigen::VectorXd g = exact_on_grid(ctx);

  ReplicationResult out;
  out.mode = SamplingMode::constant;
  out.replication = replication;
  out.samples = static_cast<long>(stream.size());
  out.sigma_hat = sigma_hat;
  out.nu = static_cast<double>(count) / cfg.interval.length();
  score(ctx, ghat, g, out);

  if (keep) {
    ReplicationPaths paths;
    paths.t = Eigen::VectorXd::LinSpaced(n + 1, cfg.interval.lo, cfg.interval.hi);
    paths.g = g;
    paths.ghat = ghat;
    paths.y = Eigen::VectorXd::Constant(n + 1, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < stream.size(); ++i) paths.y[stream.cell(i)] = stream.value(i);
    paths.rate_hz = Eigen::VectorXd::Constant(n + 1, rate);
    paths.rate_hz.head(calib).setConstant(cfg.rate.rho2());
    paths.settings = settings;
    out.paths = std::move(paths);
  }
  return out;
}

}  // namespace

long ExperimentConfig::cells() const {
  return grid_index(interval.length(), rate.xi, "interval length");
}

long ExperimentConfig::calibration_cells() const {
  return static_cast<long>(std::llround(calibration_fraction * static_cast<double>(cells())));
}

std::vector<Interval> ExperimentConfig::resolved_windows(const SignalSpec& spec) const {
  return windows.empty() ? spec.windows() : windows;
}

void ExperimentConfig::validate() const {
  rate.validate();
  if (!(interval.lo < interval.hi)) fail("interval_hi", "must exceed interval_lo");
  if (replications < 1) fail("B", "must be >= 1");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 0.5)) {
    fail("calibration_fraction", "must lie in (0, 0.5)");
  }
  if (!(noise.sigma >= 0.0)) fail("sigma", "must be >= 0");
  if (threshold_sigma && !(*threshold_sigma >= 0.0)) fail("threshold_sigma", "must be >= 0");
  if (order < 1 || order > 10) fail("order", "must lie in 1..10");
  if (table_depth < 1 || table_depth > 20) fail("depth", "must lie in 1..20");
  if (constant_depth < 0) fail("constant_depth", "must be >= 0");
  for (const auto& w : windows) {
    if (!(w.lo < w.hi) || w.lo < interval.lo || w.hi > interval.hi) {
      fail("windows", "each window must satisfy lo < hi inside the interval");
    }
  }
  try {
    (void)cells();
  } catch (const Error& e) {
    fail("xi", e.what());
  }
  const long calib = calibration_cells();
  if (calib < 50) fail("calibration_fraction", "leaves fewer than 50 calibration samples");
}

std::string_view mode_name(SamplingMode mode) {
  return mode == SamplingMode::dual ? "dual" : "constant";
}

StudyContext StudyContext::make(const ExperimentConfig& cfg) {
  cfg.validate();
  SignalSpec signal = make_signal(cfg.signal);
  signal.interval = cfg.interval;
  auto table = cascade_tabulate(daubechies_filter(cfg.order), cfg.table_depth);
  auto windows = cfg.resolved_windows(signal);
  return StudyContext{cfg, std::move(signal), std::move(table), std::move(windows)};
}

double ise(const Eigen::VectorXd& ghat, const Eigen::VectorXd& g, double xi, const Interval& region) {
  if (ghat.size() != g.size()) throw Error(ErrorCategory::validation, "ise: size mismatch");
  const long lo = grid_index(region.lo, xi, "ise region bound");
  const long hi = grid_index(region.hi, xi, "ise region bound");
  if (lo < 0 || hi >= g.size() || lo > hi) {
    throw Error(ErrorCategory::validation, "ise: region outside the grid");
  }
  if (lo == hi) return 0.0;
  const auto diff = (ghat.segment(lo, hi - lo + 1) - g.segment(lo, hi - lo + 1)).array().square();
  double acc = 0.5 * (diff[0] + diff[hi - lo]);
  for (long m = 1; m < hi - lo; ++m) acc += diff[m];
  return acc * xi;
}

ReplicationResult run_replication(const StudyContext& ctx, std::uint32_t replication,
                                  SamplingMode mode, long count, bool keep_paths) {
  if (mode == SamplingMode::dual) return run_dual(ctx, replication, keep_paths);
  return run_constant(ctx, replication, count, keep_paths);
}

MiseEstimate summarize(const std::vector<double>& values) {
  MiseEstimate out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mise = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mise) * (v - out.mise);
    out.mc_stderr = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

std::uint32_t median_index(const std::vector<ReplicationResult>& results) {
  if (results.empty()) throw Error(ErrorCategory::validation, "median of an empty study");
  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return results[a].ise_full < results[b].ise_full;
  });
  return results[order[(order.size() - 1) / 2]].replication;
}

StudySummary run_study(const ExperimentConfig& cfg, int jobs) {
  return run_study(StudyContext::make(cfg), jobs);
}

StudySummary run_study(const StudyContext& ctx, int jobs) {
  const int b = ctx.cfg.replications;
  std::vector<ReplicationResult> dual(static_cast<std::size_t>(b));
  std::vector<ReplicationResult> constant(static_cast<std::size_t>(b));

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= b) return;
      try {
        const auto idx = static_cast<std::uint32_t>(r);
        dual[static_cast<std::size_t>(r)] = run_replication(ctx, idx, SamplingMode::dual);
        constant[static_cast<std::size_t>(r)] = run_replication(
            ctx, idx, SamplingMode::constant, dual[static_cast<std::size_t>(r)].samples);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(b);
        return;
      }
    }
  };
  const int threads = std::clamp(jobs, 1, b);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  StudySummary out;
  out.signal = ctx.cfg.signal;
  out.replications = b;
  auto collect = [&](const std::vector<ReplicationResult>& rs, auto field) {
    std::vector<double> v;
    v.reserve(rs.size());
    for (const auto& r : rs) v.push_back(field(r));
    return summarize(v);
  };
  out.dual_full = collect(dual, [](const auto& r) { return r.ise_full; });
  out.constant_full = collect(constant, [](const auto& r) { return r.ise_full; });
  out.dual_pooled = collect(dual, [](const auto& r) { return r.ise_pooled; });
  out.constant_pooled = collect(constant, [](const auto& r) { return r.ise_pooled; });
  for (std::size_t w = 0; w < ctx.windows.size(); ++w) {
    out.dual_windows.push_back(collect(dual, [w](const auto& r) { return r.ise_windows[w]; }));
    out.constant_windows.push_back(
        collect(constant, [w](const auto& r) { return r.ise_windows[w]; }));
  }
  out.median_replication = median_index(dual);
  out.mean_samples = collect(dual, [](const auto& r) { return static_cast<double>(r.samples); }).mise;
  out.mean_pi = collect(dual, [](const auto& r) { return r.pi; }).mise;
  out.mean_nu = collect(dual, [](const auto& r) { return r.nu; }).mise;
  out.dual = std::move(dual);
  out.constant = std::move(constant);
  return out;
}

}  // namespace dualrate
