#include "dualrate/cli.hpp"

#include "dualrate/config.hpp"
#include "dualrate/csv.hpp"
#include "dualrate/estimator.hpp"
#include "dualrate/experiment_harness.hpp"
#include "dualrate/signal_models.hpp"
#include "dualrate/wavelet_basis.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

namespace fs = std::filesystem;

namespace dualrate {
namespace {

struct Invocation {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  std::string out;
  int jobs = 0;
  bool exclude_calibration = false;
  CLI::Option* exclude_flag = nullptr;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help,
                      Invocation& inv, bool out_is_dir) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--config", inv.config_file, "flat key=value configuration file");
  sub->add_option("--out", inv.out, out_is_dir ? "output directory" : "output CSV file")->required();
  sub->add_option("--jobs", inv.jobs, "worker threads (default: available cores)");
  inv.exclude_flag =
      sub->add_flag("--exclude-calibration", inv.exclude_calibration,
                    "score ISE over the interval after the calibration prefix");
  for (const auto& key : config_keys()) {
    if (key == "command") continue;
    std::string names = "--" + key;
    if (key == "signal") names += ",--name";
    inv.options[key] = sub->add_option(names, inv.values[key]);
  }
  return sub;
}

RunConfig resolve(const std::string& command, const Invocation& inv) {
  std::vector<KeyValue> overrides;
  overrides.push_back({"command", command, "subcommand"});
  for (const auto& [key, opt] : inv.options) {
    if (opt->count() > 0) overrides.push_back({key, inv.values.at(key), "--" + key});
  }
  if (inv.exclude_flag->count() > 0) {
    overrides.push_back({"exclude_calibration", "true", "--exclude-calibration"});
  }
  std::optional<fs::path> file;
  if (!inv.config_file.empty()) file = inv.config_file;
  auto cfg = resolve_config(file, overrides);
  return cfg;
}

int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Manifest next to a single output file: <file>.manifest
void write_file_manifest(const fs::path& out, const RunConfig& cfg, double seconds, int jobs) {
  ManifestInfo info{{out.filename().string()}, seconds, jobs};
  write_text(fs::path(out.string() + ".manifest"), render_manifest(cfg, info));
}

void write_dir_manifest(const fs::path& dir, const RunConfig& cfg, std::vector<std::string> artifacts,
                        double seconds, int jobs) {
  ManifestInfo info{std::move(artifacts), seconds, jobs};
  write_text(dir / "manifest.cfg", render_manifest(cfg, info));
}

void check_parent(const fs::path& out) {
  const auto parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw Error(ErrorCategory::io, "output directory " + parent.string() + " does not exist");
  }
}

WaveletTable table_for(const RunConfig& cfg) {
  const auto family = parse_family(cfg.family);
  const auto filter = family == WaveletFamily::haar ? haar_filter()
                                                     : daubechies_filter(cfg.experiment.order);
  return cascade_tabulate(filter, cfg.experiment.table_depth);
}

int cmd_tabulate(const RunConfig& cfg, const fs::path& out) {
  const auto start = std::chrono::steady_clock::now();
  check_parent(out);
  const auto table = table_for(cfg);
  const Eigen::VectorXd u = table.abscissae();
  CsvWriter csv(out, {"u", "phi", "psi"});
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    csv.cell(u[k]).cell(table.phi_values()[k]).cell(table.psi_values()[k]);
    csv.end_row();
  }
  csv.close();
  write_file_manifest(out, cfg, seconds_since(start), 1);
  return exit_code::ok;
}

int cmd_emit(const RunConfig& cfg, const fs::path& out) {
  const auto start = std::chrono::steady_clock::now();
  check_parent(out);
  auto spec = make_signal(cfg.experiment.signal);
  spec.interval = cfg.experiment.interval;
  const auto& iv = cfg.experiment.interval;
  const auto n = static_cast<long>(std::floor(iv.length() / cfg.step + 1e-9));
  CsvWriter csv(out, {"t", "g"});
  for (long m = 0; m <= n; ++m) {
    const double t = iv.lo + static_cast<double>(m) * cfg.step;
    csv.cell(t).cell(eval_signal(spec, t));
    csv.end_row();
  }
  csv.close();
  write_file_manifest(out, cfg, seconds_since(start), 1);
  return exit_code::ok;
}

int cmd_estimate(const RunConfig& cfg, const fs::path& out) {
  const auto start = std::chrono::steady_clock::now();
  check_parent(out);
  const auto ctx = StudyContext::make(cfg.experiment);
  ReplicationResult result;
  if (cfg.mode == "dual") {
    result = run_replication(ctx, cfg.replication, SamplingMode::dual, 0, true);
  } else {
    const long calib = cfg.experiment.calibration_cells();
    const long n = cfg.experiment.cells();
    const double remaining = static_cast<double>(n - calib) * cfg.experiment.rate.xi;
    const long count =
        std::min(n, calib + static_cast<long>(std::llround(cfg.rate * remaining)));
    result = run_replication(ctx, cfg.replication, SamplingMode::constant, count, true);
  }
  const auto& paths = *result.paths;
  CsvWriter csv(out, {"t", "ghat", "g"});
  for (Eigen::Index m = 0; m < paths.t.size(); ++m) {
    csv.cell(paths.t[m]).cell(paths.ghat[m]).cell(paths.g[m]);
    csv.end_row();
  }
  csv.close();
  write_file_manifest(out, cfg, seconds_since(start), 1);
  return exit_code::ok;
}

void write_rate_trace(const fs::path& path, const ReplicationPaths& paths, const RateConfig& rate,
                      double t0) {
  const auto& trace = *paths.trace;
  std::map<long, Witness> witnesses;
  for (const auto& tr : trace.transitions) {
    if (tr.witness) witnesses[tr.step] = *tr.witness;
  }
  CsvWriter csv(path, {"t", "regime", "rate_hz", "witness_level", "witness_coeff"});
  for (long k = 0; k < trace.steps(); ++k) {
    const auto regime = trace.regimes[static_cast<std::size_t>(k)];
    csv.cell(t0 + static_cast<double>(k) * rate.xi)
        .cell(std::string(regime_name(regime)))
        .cell(is_high_rate(regime) ? rate.rho2() : rate.rho1());
    if (auto it = witnesses.find(k); it != witnesses.end()) {
      csv.cell(static_cast<long>(it->second.level)).cell(it->second.coefficient);
    } else {
      csv.cell(std::string()).cell(std::string());
    }
    csv.end_row();
  }
  csv.close();
}

void write_median(const fs::path& path, const ReplicationPaths& dual, const ReplicationPaths& constant) {
  CsvWriter csv(path, {"t", "y_noisy", "g", "ghat_dual", "ghat_const", "rate"});
  for (Eigen::Index m = 0; m < dual.t.size(); ++m) {
    csv.cell(dual.t[m]).cell(dual.y[m]).cell(dual.g[m]).cell(dual.ghat[m]).cell(constant.ghat[m]);
    csv.cell(dual.rate_hz[m]);
    csv.end_row();
  }
  csv.close();
}

struct SignalOutcome {
  StudySummary summary;
  ReplicationResult median_dual;
  ReplicationResult median_constant;
};

SignalOutcome study_signal(const RunConfig& cfg, const std::string& signal, int jobs) {
  auto exp = cfg.experiment;
  exp.signal = signal;
  const auto ctx = StudyContext::make(exp);
  SignalOutcome out{run_study(ctx, jobs), {}, {}};
  const auto idx = out.summary.median_replication;
  out.median_dual = run_replication(ctx, idx, SamplingMode::dual, 0, true);
  out.median_constant =
      run_replication(ctx, idx, SamplingMode::constant, out.median_dual.samples, true);
  return out;
}

void add_mise_rows(CsvWriter& csv, const std::string& signal, const MiseEstimate& dual,
                   const MiseEstimate& constant) {
  csv.cell(signal).cell(std::string("dual")).cell(dual.mise).cell(dual.mc_stderr);
  csv.end_row();
  csv.cell(signal).cell(std::string("constant")).cell(constant.mise).cell(constant.mc_stderr);
  csv.end_row();
}

int cmd_run(const RunConfig& cfg, const fs::path& dir, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  ensure_directory(dir);
  const auto& signal = cfg.experiment.signal;
  const auto outcome = study_signal(cfg, signal, jobs);
  const auto& s = outcome.summary;

  CsvWriter reps(dir / "replications.csv", {"replication", "mode", "ISE_full", "ISE_windows",
                                             "samples", "sigma_hat", "pi", "nu", "upswitches"});
  for (std::size_t r = 0; r < s.dual.size(); ++r) {
    for (const auto* res : {&s.dual[r], &s.constant[r]}) {
      reps.cell(static_cast<long>(res->replication)).cell(std::string(mode_name(res->mode)));
      reps.cell(res->ise_full).cell(res->ise_pooled).cell(res->samples).cell(res->sigma_hat);
      reps.cell(res->pi).cell(res->nu).cell(res->upswitches);
      reps.end_row();
    }
  }
  reps.close();

  CsvWriter full(dir / "mise_full.csv", {"signal", "mode", "MISE", "mc_stderr"});
  add_mise_rows(full, signal, s.dual_full, s.constant_full);
  full.close();
  CsvWriter windows(dir / "mise_windows.csv", {"signal", "mode", "MISE", "mc_stderr"});
  add_mise_rows(windows, signal, s.dual_pooled, s.constant_pooled);
  windows.close();

  const std::string median = "median_" + signal + ".csv";
  const std::string trace = "rate_trace_" + signal + ".csv";
  write_median(dir / median, *outcome.median_dual.paths, *outcome.median_constant.paths);
  write_rate_trace(dir / trace, *outcome.median_dual.paths, cfg.experiment.rate,
                   cfg.experiment.interval.lo);
  write_dir_manifest(dir, cfg, {"replications.csv", "mise_full.csv", "mise_windows.csv", median, trace},
                     seconds_since(start), jobs);
  return exit_code::ok;
}

int cmd_reproduce(const RunConfig& cfg, const fs::path& dir, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  ensure_directory(dir);
  CsvWriter full(dir / "mise_full.csv", {"signal", "mode", "MISE", "mc_stderr"});
  CsvWriter windows(dir / "mise_windows.csv", {"signal", "mode", "MISE", "mc_stderr"});
  std::vector<std::string> artifacts{"mise_full.csv", "mise_windows.csv"};
  for (const auto& signal : cfg.signals) {
    const auto outcome = study_signal(cfg, signal, jobs);
    add_mise_rows(full, signal, outcome.summary.dual_full, outcome.summary.constant_full);
    add_mise_rows(windows, signal, outcome.summary.dual_pooled, outcome.summary.constant_pooled);
    const std::string median = "median_" + signal + ".csv";
    const std::string trace = "rate_trace_" + signal + ".csv";
    write_median(dir / median, *outcome.median_dual.paths, *outcome.median_constant.paths);
    write_rate_trace(dir / trace, *outcome.median_dual.paths, cfg.experiment.rate,
                     cfg.experiment.interval.lo);
    artifacts.push_back(median);
    artifacts.push_back(trace);
  }
  full.close();
  windows.close();
  write_dir_manifest(dir, cfg, artifacts, seconds_since(start), jobs);
  return exit_code::ok;
}

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::validation: return exit_code::validation;
    case ErrorCategory::io: return exit_code::io;
    case ErrorCategory::convergence: return exit_code::convergence;
    case ErrorCategory::calibration: return exit_code::calibration;
    case ErrorCategory::sequencing: return exit_code::sequencing;
    case ErrorCategory::incomplete_window: return exit_code::incomplete_window;
    case ErrorCategory::no_antecedent: return exit_code::no_antecedent;
  }
  return exit_code::internal;
}

std::string error_line(std::string_view category, std::string_view key, std::string_view message) {
  std::string out = "error category=" + std::string(category);
  if (!key.empty()) out += " key=" + std::string(key);
  return out + " message=" + quote(message);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Dual-rate wavelet sampling and Monte Carlo studies", "dualrate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  std::map<std::string, Invocation> invocations;
  std::map<std::string, CLI::App*> subs;
  auto add = [&](const std::string& name, const std::string& help, bool dir) {
    subs[name] = add_command(app, name, help, invocations[name], dir);
  };
  add("tabulate-wavelet", "tabulate phi and psi on the dyadic grid (u, phi, psi)", false);
  add("emit-signal", "write a test signal on a regular grid (t, g)", false);
  add("estimate", "one replication in dual or constant mode (t, ghat, g)", false);
  add("run", "one Monte Carlo study for --signal", true);
  add("reproduce", "MISE tables and median realizations for --signals", true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    std::cerr << error_line("usage", "", e.what()) << "\n";
    return exit_code::usage;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    const auto& inv = invocations[name];
    std::string key;
    try {
      const auto cfg = resolve(name, inv);
      const fs::path out = inv.out;
      const int jobs = resolve_jobs(inv.jobs);
      if (name == "tabulate-wavelet") return cmd_tabulate(cfg, out);
      if (name == "emit-signal") return cmd_emit(cfg, out);
      if (name == "estimate") return cmd_estimate(cfg, out);
      if (name == "run") return cmd_run(cfg, out, jobs);
      return cmd_reproduce(cfg, out, jobs);
    } catch (const ConfigError& e) {
      std::cerr << error_line(category_name(e.category()), e.key(), e.what()) << "\n";
      return exit_code_for(e.category());
    } catch (const Error& e) {
      std::cerr << error_line(category_name(e.category()), "", e.what()) << "\n";
      return exit_code_for(e.category());
    } catch (const std::exception& e) {
      std::cerr << error_line("internal", "", e.what()) << "\n";
      return exit_code::internal;
    }
  }
  std::cerr << app.help() << "\n";
  return exit_code::usage;
}

}  // namespace dualrate
