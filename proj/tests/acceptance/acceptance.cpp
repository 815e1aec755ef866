// Acceptance checks. One PASS/FAIL line per criterion, with the measured
// numbers, and a nonzero exit status if any criterion fails.

#include "dualrate/acquisition_controller.hpp"
#include "dualrate/estimator.hpp"
#include "dualrate/experiment_harness.hpp"
#include "dualrate/wavelet_basis.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace dualrate;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

bool within(double value, double target, double rel) { return std::abs(value / target - 1.0) <= rel; }

// ---- criteria 1 and 2 ---------------------------------------------------

struct Reference {
  const char* signal;
  double dual_full, const_full, dual_win, const_win;
  bool strong;  // dual << constant expected
};

constexpr std::array<Reference, 4> kReference{{
    {"g1", 0.348, 0.963, 0.202, 0.869, true},
    {"g2", 0.320, 0.342, 0.180, 0.245, false},
    {"g3", 0.341, 0.965, 0.185, 0.763, true},
    {"g4", 0.321, 0.348, 0.162, 0.209, false},
}};

// Largest dual/constant ratio the two +-20% bands allow for the g1 and g3
// references: 0.348 * 1.2 / (0.963 * 0.8).
constexpr double kStrongRatio = 0.54;

void mise_tables() {
  bool ok1 = true;
  bool ok2 = true;
  std::string d1, d2;
  for (const auto& ref : kReference) {
    ExperimentConfig cfg;
    cfg.signal = ref.signal;
    const auto s = run_study(cfg, jobs());
    const double df = s.dual_full.mise, cf = s.constant_full.mise;
    const double dw = s.dual_pooled.mise, cw = s.constant_pooled.mise;

    const bool bands1 = within(df, ref.dual_full, 0.20) && within(cf, ref.const_full, 0.20);
    bool order;
    if (ref.strong) {
      order = df / cf < kStrongRatio;
    } else {
      // not significantly above: within two standard errors of the difference
      const double se = std::hypot(s.dual_full.mc_stderr, s.constant_full.mc_stderr);
      order = df <= cf + 2.0 * se;
    }
    ok1 = ok1 && bands1 && order;
    char buf[256];
    std::snprintf(buf, sizeof buf, " %s dual=%.3f(%+.0f%%) const=%.3f(%+.0f%%) ratio=%.2f order=%s;",
                  ref.signal, df, 100 * (df / ref.dual_full - 1), cf, 100 * (cf / ref.const_full - 1),
                  df / cf, order ? "ok" : "violated");
    d1 += buf;

    bool bands2 = within(dw, ref.dual_win, 0.25) && within(cw, ref.const_win, 0.25);
    if (ref.strong) bands2 = bands2 && dw / cw < 0.5;
    ok2 = ok2 && bands2;
    std::snprintf(buf, sizeof buf, " %s dual=%.3f(%+.0f%%) const=%.3f(%+.0f%%) ratio=%.2f;", ref.signal,
                  dw, 100 * (dw / ref.dual_win - 1), cw, 100 * (cw / ref.const_win - 1), dw / cw);
    d2 += buf;
  }
  report(1, "full-interval MISE, B=500", ok1, d1);
  report(2, "pooled window MISE, B=500", ok2, d2);
}

// ---- criterion 3 ---------------------------------------------------------

void wavelet_properties() {
  const auto filter = daubechies_filter(5);
  const auto table = cascade_tabulate(filter, 12);
  const Eigen::VectorXd& phi = table.phi_values();
  const Eigen::VectorXd& psi = table.psi_values();
  const double h = table.step();
  const long n = phi.size();
  const long per_unit = 1L << table.depth();

  // trapezoid on the nodes of two node-aligned sequences, the second shifted by `shift` nodes
  auto inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, long shift) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      const long k = i - shift;
      if (k < 0 || k >= n) continue;
      const double w = (i == 0 || i == n - 1 || k == 0 || k == n - 1) ? 0.5 : 1.0;
      acc += w * a[i] * b[k];
    }
    return acc * h;
  };
  double ortho = 0.0;
  for (long s = -9; s <= 9; ++s) {
    const double id = s == 0 ? 1.0 : 0.0;
    ortho = std::max(ortho, std::abs(inner(phi, phi, s * per_unit) - id));
    ortho = std::max(ortho, std::abs(inner(psi, psi, s * per_unit) - id));
    ortho = std::max(ortho, std::abs(inner(phi, psi, s * per_unit)));
  }

  // moments in the centred coordinate u = x - offset, composite Simpson on the nodes
  double moment = 0.0;
  for (int m = 0; m < 5; ++m) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) * h - table.offset();
      const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * std::pow(u, m) * psi[i];
    }
    moment = std::max(moment, std::abs(acc * h / 3.0));
  }

  // phi(x) = sqrt2 sum_k h_k phi(2x - k) at every node
  double two_scale = 0.0;
  const auto& hk = filter.coefficients;
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < hk.size(); ++k) {
      const long arg = 2 * i - static_cast<long>(k) * per_unit;
      if (arg >= 0 && arg < n) acc += hk[k] * phi[arg];
    }
    two_scale = std::max(two_scale, std::abs(std::sqrt(2.0) * acc - phi[i]));
  }

  double unity = 0.0;
  for (long i = 0; i < per_unit; ++i) {
    double acc = 0.0;
    for (long k = i; k < n; k += per_unit) acc += phi[k];
    unity = std::max(unity, std::abs(acc - 1.0));
  }

  std::string d = "orthonormality " + fmt("%.2e", ortho) + ", moments " + fmt("%.2e", moment) +
                  ", two-scale " + fmt("%.2e", two_scale) + ", partition " + fmt("%.2e", unity);
  report(3, "wavelet basis properties", ortho < 1e-3 && moment < 1e-4 && two_scale < 1e-6 && unity < 1e-5, d);
}

// ---- criterion 4 ---------------------------------------------------------

void threshold_algebra() {
  const double delta = threshold(2.0, 0.15, 100.0);
  const double ref = 0.3 * std::sqrt(std::log(100.0) / 100.0);
  const double rho1 = 100.0 / 6.0;
  const double rho2 = 100.0;

  RateTrace low, high;
  low.regimes.assign(1000, Regime::low);
  low.sampled.assign(1000, false);
  high.regimes.assign(1000, Regime::high);
  high.sampled.assign(1000, true);
  const bool exact = budget_rate(rho1, rho2, 0.0) == rho1 && budget_rate(rho1, rho2, 1.0) == rho2 &&
                     long_run_rate(low, rho1, rho2).nu == rho1 && long_run_rate(high, rho1, rho2).nu == rho2;
  const double nu = budget_rate(rho1, rho2, 0.1);
  const double e1 = std::abs(delta / ref - 1.0);
  const double e2 = std::abs(nu / 25.0 - 1.0);
  report(4, "threshold and budget algebra", e1 < 1e-12 && exact && e2 < 1e-12,
         "threshold rel err " + fmt("%.1e", e1) + ", nu(0.1) rel err " + fmt("%.1e", e2) +
             ", endpoints " + (exact ? "exact" : "inexact"));
}

// ---- criterion 5 ---------------------------------------------------------

// Pilot with seed 1, B=200: 129 of 200 replications (0.645) had a false
// upswitch after calibration. Bound = pilot + 3 binomial standard errors.
constexpr double kPropertyIBound = 0.75;

void property_one() {
  ExperimentConfig cfg;
  cfg.signal = "base";
  cfg.replications = 200;
  const auto s = run_study(cfg, jobs());
  int any = 0;
  for (const auto& r : s.dual) any += r.upswitches > 0 ? 1 : 0;
  const double frac = any / 200.0;
  report(5, "Property I false-upswitch fraction", frac <= kPropertyIBound,
         fmt("fraction %.3f", frac) + fmt(" <= bound %.2f", kPropertyIBound));
}

// ---- criterion 6 ---------------------------------------------------------

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void behaviour() {
  std::string d;
  bool ok = true;

  // noiseless g1: an upswitch in every window, back to low between windows
  {
    ExperimentConfig cfg;
    cfg.signal = "g1";
    cfg.noise.sigma = 0.0;
    cfg.threshold_sigma = 0.15;
    const auto ctx = StudyContext::make(cfg);
    const auto r = run_replication(ctx, 0, SamplingMode::dual, 0, true);
    const auto& trace = *r.paths->trace;
    const double xi = cfg.rate.xi;
    bool each = true;
    for (const auto& w : ctx.windows) {
      bool hit = false;
      for (const auto& tr : trace.transitions) {
        const double t = static_cast<double>(tr.step) * xi;
        hit |= tr.from == Regime::low && is_high_rate(tr.to) && w.contains(t);
      }
      each &= hit;
    }
    bool between = true;
    for (std::size_t i = 0; i + 1 < ctx.windows.size(); ++i) {
      bool low = false;
      for (long k = std::lround(ctx.windows[i].hi / xi); k < std::lround(ctx.windows[i + 1].lo / xi); ++k) {
        low |= trace.regimes[static_cast<std::size_t>(k)] == Regime::low;
      }
      between &= low;
    }
    ok &= each && between;
    d += std::string("upswitch in each window ") + (each ? "yes" : "no") + ", low between " +
         (between ? "yes" : "no") + fmt(", upswitches %.0f", static_cast<double>(r.upswitches));
  }

  // noiseless smooth signal starting at the high rate
  {
    ExperimentConfig cfg;
    cfg.signal = "base";
    cfg.noise.sigma = 0.0;
    cfg.threshold_sigma = 0.15;
    const auto ctx = StudyContext::make(cfg);
    const auto r = run_replication(ctx, 0, SamplingMode::dual, 0, true);
    const long tau0 = tau0_steps(ctx.table.width(), cfg.rate.p, cfg.rate.ell, cfg.rate.xi);
    long down = -1;
    for (const auto& tr : r.paths->trace->transitions) {
      if (tr.to == Regime::low) {
        down = tr.step;
        break;
      }
    }
    const bool quick = down >= 0 && down <= 2 * tau0;
    ok &= quick;
    d += fmt("; downswitch at t=%.2f", down * cfg.rate.xi) + fmt(" (2 tau0 = %.2f)", 2 * tau0 * cfg.rate.xi);
  }

  // window sup errors, medians over 50 replications
  {
    ExperimentConfig cfg;
    cfg.signal = "g1";
    cfg.replications = 50;
    const auto ctx = StudyContext::make(cfg);
    const std::size_t nw = ctx.windows.size();
    std::vector<std::vector<double>> dual_sup(nw), const_sup(nw);
    const double xi = cfg.rate.xi;
    auto sup = [&](const ReplicationPaths& p, const Interval& w) {
      double m = 0.0;
      for (long k = std::lround(w.lo / xi); k <= std::lround(w.hi / xi); ++k) {
        m = std::max(m, std::abs(p.ghat[k] - p.g[k]));
      }
      return m;
    };
    for (std::uint32_t rep = 0; rep < 50; ++rep) {
      const auto a = run_replication(ctx, rep, SamplingMode::dual, 0, true);
      const auto b = run_replication(ctx, rep, SamplingMode::constant, a.samples, true);
      for (std::size_t w = 0; w < nw; ++w) {
        dual_sup[w].push_back(sup(*a.paths, ctx.windows[w]));
        const_sup[w].push_back(sup(*b.paths, ctx.windows[w]));
      }
    }
    bool all = true;
    d += "; sup ratios";
    for (std::size_t w = 0; w < nw; ++w) {
      const double ratio = median(dual_sup[w]) / median(const_sup[w]);
      all &= ratio < 0.5;
      d += fmt(" %.2f", ratio);
    }
    ok &= all;
  }
  report(6, "rate-switching behaviour", ok, d);
}

// ---- criterion 7 ---------------------------------------------------------

void estimator_oracle() {
  const auto table = cascade_tabulate(daubechies_filter(5), 12);
  const auto ref = oracle::dyadic_scaling(daubechies_filter(5).coefficients, 12);
  const auto signal = base_sinusoid();
  auto g = [&](double t) { return eval_signal(signal, t); };
  const double xi = 0.001;
  const long cells = 100000;
  SampleStream s(xi);
  for (long k = 0; k < cells; ++k) s.push(k, g(static_cast<double>(k) * xi));
  const auto path = impute(s, 100.0);
  const int q = 4;
  const auto coeffs = compute_coefficients(path, table, 1.0, q, {0.0, 100.0});
  const oracle::Projection proj(ref, table.offset(), 1.0, q, g, 10.0, 90.0, 4096);
  double err = 0.0;
  for (double t = 10.0; t <= 90.0 + 1e-9; t += 0.01) {
    err = std::max(err, std::abs(reconstruct(coeffs, q, 0.0, t, table) - proj(t)));
  }
  report(7, "estimator vs independent projection", err < 1e-3, fmt("sup error %.2e on [10, 90]", err));
}

// ---- criterion 8 ---------------------------------------------------------

int sh(const std::string& args) {
  const std::string cmd = std::string(DUALRATE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  const fs::path root = fs::current_path() / "acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto a = root / "a", b = root / "b", c = root / "c";
  bool ok = sh("reproduce --signals g1,g3 --B 6 --seed 4242 --jobs 1 --out " + a.string()) == 0;
  ok = ok && sh("reproduce --config " + (a / "manifest.cfg").string() + " --jobs 3 --out " + b.string()) == 0;
  ok = ok && sh("reproduce --config " + (a / "manifest.cfg").string() + " --jobs 2 --out " + c.string()) == 0;
  int files = 0;
  bool same = ok;
  if (ok) {
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      const auto name = entry.path().filename();
      const auto text = slurp(entry.path());
      same &= text == slurp(b / name) && text == slurp(c / name);
    }
  }
  same &= files == 6;
  report(8, "determinism across runs and --jobs", same,
         fmt("%.0f CSVs compared", files) + (ok ? "" : ", a run failed"));
}

}  // namespace

int main() {
  using Step = std::function<void()>;
  const std::vector<Step> steps{threshold_algebra, wavelet_properties, estimator_oracle, determinism,
                                behaviour, property_one, mise_tables};
  for (const auto& step : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      std::printf("FAIL exception: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
