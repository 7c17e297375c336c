#pragma once

// Command-line driver: single solves and convergence sweeps over the built-in
// benchmark cases, with an aligned table on stdout and an optional CSV file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stokesls/geometry.hpp"
#include "stokesls/postproc.hpp"
#include "stokesls/problems.hpp"

namespace stokesls::cli {

struct UsageError : std::runtime_error {
  int code;
  explicit UsageError(const std::string& msg, int exit_code = 2)
      : std::runtime_error(msg), code(exit_code) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  enum class Command { Solve, Sweep, ListCases };
  Command command = Command::ListCases;
  int case_id = 1;
  int w_min = 4;
  int w_max = 4;
  std::optional<double> re;
  std::optional<double> nu;
  double tol = 1e-10;
  int max_iter = 20000;
  int quad_oversample = 3;
  std::string out_path;
};

namespace detail {

inline void parse_order_range(const std::string& text, bool allow_range, RunConfig& cfg) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      cfg.w_min = cfg.w_max = std::stoi(text);
    } else {
      cfg.w_min = std::stoi(text.substr(0, colon));
      cfg.w_max = std::stoi(text.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw UsageError("--w expects an integer or a range like 2:8");
  }
  if (!allow_range && cfg.w_min != cfg.w_max)
    throw UsageError("solve takes a single --w; use sweep for a range");
  if (cfg.w_min < 2) throw UsageError("--w must be at least 2");
  if (cfg.w_max < cfg.w_min) throw UsageError("--w range must be nondecreasing");
}

}  // namespace detail

/// Parses command-line arguments (without the program name). Throws
/// UsageError on malformed input; help requests carry exit code 0.
inline RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig cfg;
  CLI::App app{"nonconforming least-squares spectral element solver for generalized Stokes"};
  app.name("stokesls");
  app.require_subcommand(1);

  std::string w_text;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--case", cfg.case_id, "benchmark case 1..6")->required();
    sub->add_option("--w", w_text, "polynomial degree (sweep also accepts a range like 2:8)")
        ->required();
    sub->add_option("--re", [&cfg](const CLI::results_t& v) {
      try {
        cfg.re = std::stod(v[0]);
      } catch (const std::exception&) {
        return false;
      }
      return true;
    }, "Reynolds number (case 2)");
    sub->add_option("--nu", [&cfg](const CLI::results_t& v) {
      try {
        cfg.nu = std::stod(v[0]);
      } catch (const std::exception&) {
        return false;
      }
      return true;
    }, "viscosity (cases 1, 3..6)");
    sub->add_option("--tol", cfg.tol, "relative preconditioned residual tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "iteration cap");
    sub->add_option("--quad", cfg.quad_oversample, "volume quadrature oversampling (nodes = W + this)");
    sub->add_option("--out", cfg.out_path, "CSV output path");
  };
  CLI::App* solve = app.add_subcommand("solve", "solve one case at a single degree");
  CLI::App* sweep = app.add_subcommand("sweep", "run a convergence sweep over degrees");
  app.add_subcommand("list-cases", "describe the built-in benchmark cases");
  add_common(solve);
  add_common(sweep);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    throw UsageError(app.help(), 0);
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\nrun with --help for usage", 2);
  }

  if (app.got_subcommand("list-cases")) {
    cfg.command = RunConfig::Command::ListCases;
    return cfg;
  }
  cfg.command =
      app.got_subcommand(solve) ? RunConfig::Command::Solve : RunConfig::Command::Sweep;
  detail::parse_order_range(w_text, cfg.command == RunConfig::Command::Sweep, cfg);
  if (cfg.case_id < 1 || cfg.case_id > 6) throw UsageError("--case must be in 1..6");
  if (cfg.re && cfg.case_id != 2) throw UsageError("--re applies to case 2 only");
  if (cfg.nu && cfg.case_id == 2) throw UsageError("case 2 takes --re, not --nu");
  if (cfg.re && !(*cfg.re > 0.0)) throw UsageError("--re must be positive");
  if (cfg.nu && !(*cfg.nu > 0.0)) throw UsageError("--nu must be positive");
  if (!(cfg.tol > 0.0)) throw UsageError("--tol must be positive");
  if (cfg.max_iter < 1) throw UsageError("--max-iter must be at least 1");
  if (cfg.quad_oversample < 1) throw UsageError("--quad must be at least 1");
  return cfg;
}

/// CSV serialization; 17 significant digits so re-parsing is lossless.
inline std::string csv_string(const std::vector<postproc::ErrorReport>& reports) {
  std::string out = "case,W,param,E_u_H1,E_p_L2,E_c_L2,iters,converged,seconds\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g,%d,%s,%.17g\n", r.case_id,
                  r.order, r.param, r.e_u_h1, r.e_p_l2, r.e_c_l2, r.iterations,
                  r.converged ? "true" : "false", r.seconds);
    out += line;
  }
  return out;
}

struct RunOutcome {
  std::vector<postproc::ErrorReport> reports;
  double slope_u = 0.0;
  double slope_p = 0.0;
};

/// Runs the solves described by a validated config (solve/sweep commands).
inline RunOutcome execute(const RunConfig& cfg) {
  problems::CaseParams params;
  params.re = cfg.re;
  params.nu = cfg.nu;
  const auto cd = problems::make_case(cfg.case_id, params);
  const auto mesh = geom::build_case_mesh(cfg.case_id);
  std::vector<int> orders;
  for (int w = cfg.w_min; w <= cfg.w_max; ++w) orders.push_back(w);
  postproc::SweepConfig sweep_cfg;
  sweep_cfg.tol = cfg.tol;
  sweep_cfg.max_iter = cfg.max_iter;
  sweep_cfg.quad_oversample = cfg.quad_oversample;
  const auto result = postproc::convergence_sweep(cd, mesh, orders, sweep_cfg);
  return {result.reports, result.slope_u, result.slope_p};
}

/// Full driver: table to `out`, CSV to cfg.out_path when set.
/// Returns 0 iff every solve converged.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout) {
  if (cfg.command == RunConfig::Command::ListCases) {
    for (int id = 1; id <= 6; ++id)
      out << "case " << id << ": " << problems::make_case(id).description << "\n";
    return 0;
  }
  const RunOutcome outcome = execute(cfg);
  char line[256];
  std::snprintf(line, sizeof(line), "%4s %3s %10s %13s %13s %13s %7s %5s %9s\n", "case", "W",
                "param", "E_u_H1", "E_p_L2", "E_c_L2", "iters", "conv", "seconds");
  out << line;
  for (const auto& r : outcome.reports) {
    std::snprintf(line, sizeof(line), "%4d %3d %10.4g %13.6e %13.6e %13.6e %7d %5s %9.3f\n",
                  r.case_id, r.order, r.param, r.e_u_h1, r.e_p_l2, r.e_c_l2, r.iterations,
                  r.converged ? "yes" : "no", r.seconds);
    out << line;
  }
  if (outcome.reports.size() > 1) {
    std::snprintf(line, sizeof(line), "fitted ln-error slopes: u %.3f, p %.3f\n", outcome.slope_u,
                  outcome.slope_p);
    out << line;
  }
  if (!cfg.out_path.empty()) {
    std::ofstream file(cfg.out_path);
    if (!file) throw IoError("cannot open output file: " + cfg.out_path);
    file << csv_string(outcome.reports);
    file.flush();
    if (!file) throw IoError("failed writing output file: " + cfg.out_path);
  }
  for (const auto& r : outcome.reports)
    if (!r.converged) return 1;
  return 0;
}

}  // namespace stokesls::cli
