#pragma once

// Batch front end: turns a parsed run configuration into CSV/SVG artifacts.
// Each subcommand maps to one library sweep; rows are generated in sweep-key
// order so output files are deterministic for a fixed configuration.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blockspt/csv.hpp"
#include "blockspt/deviation_bounds.hpp"
#include "blockspt/finite_prob.hpp"
#include "blockspt/integral_geometry.hpp"
#include "blockspt/monte_carlo.hpp"
#include "blockspt/perr_pipeline.hpp"
#include "blockspt/phase_transition.hpp"
#include "blockspt/svg_plot.hpp"
#include "blockspt/types.hpp"

namespace blockspt {

/// Invalid configuration (unknown command, malformed range, empty grid, bad
/// paths). Mapped to exit status 2 by run().
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One fully resolved batch run. Flags override config-file values; the
/// string fields keep the raw LO:HI / LO:HI:STEP syntax so both sources are
/// parsed identically.
struct RunConfig {
  std::string command;
  int d = 2;
  int k = 6;
  int n = 18;
  long long trials = -1;  ///< -1 = per-command default
  unsigned long long seed = 1;
  int threads = 0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  std::string m_range;    ///< "LO:HI"
  std::string eps_range;  ///< "LO:HI:STEP"
  std::string out_dir = ".";
  int index = 0;  ///< table or figure number for the reproduce commands
  std::string source = "simulated";
};

namespace detail {

inline std::pair<int, int> parse_m_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos || s.find(':', colon + 1) != std::string::npos) {
    throw ConfigError("--m-range expects LO:HI, got '" + s + "'");
  }
  try {
    const int lo = std::stoi(s.substr(0, colon));
    const int hi = std::stoi(s.substr(colon + 1));
    if (lo > hi) throw ConfigError("--m-range: LO exceeds HI in '" + s + "'");
    return {lo, hi};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("--m-range expects integers LO:HI, got '" + s + "'");
  }
}

inline std::vector<double> parse_eps_range(const std::string& s) {
  const auto c1 = s.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : s.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw ConfigError("--eps-range expects LO:HI:STEP, got '" + s + "'");
  }
  double lo = 0, hi = 0, step = 0;
  try {
    lo = std::stod(s.substr(0, c1));
    hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    step = std::stod(s.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ConfigError("--eps-range expects numbers LO:HI:STEP, got '" + s + "'");
  }
  if (!(step > 0) || !(lo <= hi)) {
    throw ConfigError("--eps-range needs LO <= HI and STEP > 0, got '" + s + "'");
  }
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double e = lo + step * i;
    if (e > hi + 1e-12) break;
    grid.push_back(std::min(e, hi));
  }
  if (grid.empty()) throw ConfigError("--eps-range produced an empty grid");
  return grid;
}

inline std::string artifact_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline CsvRow shape_row(const std::string& quantity, const BlockShape& s) {
  CsvRow r;
  r.quantity = quantity;
  r.d = s.d;
  r.k = s.k;
  r.n = s.n;
  r.m = s.M;
  r.alpha = s.alpha();
  r.beta = s.beta();
  return r;
}

inline void fill_params(CsvRow& r, const ChernoffParams& p, bool with_t1) {
  r.param_c3s = p.c3s;
  r.param_gammas = p.gammas;
  r.param_lambda = p.lambda;
  if (with_t1) r.param_t1 = p.t1;
}

// --------------------------- subcommand bodies ----------------------------

inline int run_pt_curve(const RunConfig& cfg) {
  std::vector<double> betas;
  if (std::isfinite(cfg.beta)) {
    betas.push_back(cfg.beta);
  } else {
    for (int i = 1; i <= 49; ++i) betas.push_back(0.02 * i);
  }
  const PTCurve curve = pt_curve(cfg.d, betas);
  for (const auto& [beta, reason] : curve.skipped) {
    std::cerr << "pt-curve: skipped beta=" << beta << ": " << reason << "\n";
  }
  if (curve.points.empty()) throw numeric_error("pt_curve: no points computed");
  std::vector<CsvRow> rows;
  for (const PTPoint& p : curve.points) {
    CsvRow r;
    r.quantity = "alpha_weak";
    r.d = p.d;
    r.alpha = p.alpha_w;
    r.beta = p.beta_w;
    r.value = p.alpha_w;
    rows.push_back(r);
  }
  write_csv(artifact_path(cfg, "pt_curve.csv"), rows);
  return 0;
}

inline int run_ldp(const RunConfig& cfg, bool upper) {
  if (!std::isfinite(cfg.alpha)) {
    throw ConfigError(cfg.command + " requires --alpha");
  }
  const double beta = std::isfinite(cfg.beta) ? cfg.beta : 1.0 / 3.0;
  const RateBound rb = upper ? rate_upper(cfg.alpha, beta, cfg.d)
                             : rate_lower(cfg.alpha, beta, cfg.d);
  CsvRow r;
  r.quantity = upper ? "rate_upper" : "rate_lower";
  r.d = cfg.d;
  r.alpha = cfg.alpha;
  r.beta = beta;
  r.value = rb.exponent;
  fill_params(r, rb.params, false);
  write_csv(artifact_path(cfg, upper ? "ldp_upper.csv" : "ldp_lower.csv"), {r});
  return 0;
}

inline int run_finite_bound(const RunConfig& cfg) {
  BlockShape shape{cfg.d, cfg.k, cfg.n, cfg.d * cfg.k};
  auto [m_lo, m_hi] = cfg.m_range.empty()
                          ? std::pair<int, int>{cfg.d * cfg.k, cfg.d * cfg.n}
                          : parse_m_range(cfg.m_range);
  std::vector<CsvRow> rows;
  for (int m = m_lo; m <= m_hi; ++m) {
    shape.M = m;
    const FiniteBound perr = finite_perr_upper(shape);
    CsvRow r1 = shape_row("p_ub_ldp", shape);
    r1.value = perr.bound;
    fill_params(r1, perr.params, false);
    rows.push_back(r1);
    const FiniteBound pcor = finite_pcor_upper(shape);
    CsvRow r2 = shape_row("p_cor_ub", shape);
    r2.value = pcor.bound;
    fill_params(r2, pcor.params, true);
    rows.push_back(r2);
  }
  write_csv(artifact_path(cfg, "finite_bound.csv"), rows);
  return 0;
}

inline int run_cap_measure(const RunConfig& cfg) {
  const BlockShape shape{cfg.d, cfg.k, cfg.n, cfg.d * cfg.k};
  const std::vector<double> eps =
      cfg.eps_range.empty() ? parse_eps_range("0.4:1.0:0.01")
                            : parse_eps_range(cfg.eps_range);
  const long long trials = cfg.trials > 0 ? cfg.trials : 100000;
  std::vector<SimReport> sims;
  cap_measure_curve(shape, eps, trials, cfg.seed, cfg.threads, &sims);
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const CapBoundResult cb = cap_bound(shape, std::min(eps[i], 1.5707));
    CsvRow rb = shape_row("cap_bound", shape);
    rb.eps = eps[i];
    rb.value = cb.bound;
    rb.param_lambda = cb.lambda;
    rows.push_back(rb);
    CsvRow rs = shape_row("cap_sim", shape);
    rs.eps = eps[i];
    rs.value = sims[i].p_hat;
    rs.ci_low = sims[i].ci_low;
    rs.ci_high = sims[i].ci_high;
    rs.seed = cfg.seed;
    rows.push_back(rs);
  }
  write_csv(artifact_path(cfg, "cap_measure.csv"), rows);
  return 0;
}

inline int run_crofton(const RunConfig& cfg) {
  const BlockShape shape{cfg.d, cfg.k, cfg.n, cfg.d * cfg.k};
  const std::vector<double> eps =
      cfg.eps_range.empty() ? parse_eps_range("0.4:1.0:0.01")
                            : parse_eps_range(cfg.eps_range);
  auto [m_lo, m_hi] = cfg.m_range.empty()
                          ? std::pair<int, int>{0, cfg.d * cfg.n}
                          : parse_m_range(cfg.m_range);
  CapSource source;
  if (cfg.source == "simulated") {
    source = CapSource::simulated;
  } else if (cfg.source == "analytic") {
    source = CapSource::analytic_bound;
  } else {
    throw ConfigError("--source must be 'simulated' or 'analytic', got '" +
                      cfg.source + "'");
  }
  PipelineOptions opts;
  if (cfg.trials > 0) opts.sim_trials = cfg.trials;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;
  const PerrCurve curve = perr_pipeline(shape, eps, source, m_lo, m_hi, opts);
  if (curve.violation_flagged) {
    std::cerr << "crofton: raw curve rose by " << curve.max_raw_violation
              << " somewhere (expected nonincreasing); see *_raw rows\n";
  }
  if (curve.regression.euler_dropped) {
    std::cerr << "crofton: alternating-sum constraint inconsistent with the "
                 "fixed top volume; dropped from the regression\n";
  }
  const std::string base = source == CapSource::simulated ? "p_num" : "p_apx";
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < curve.m_values.size(); ++i) {
    BlockShape s = shape;
    s.M = curve.m_values[i];
    CsvRow r = shape_row(base, s);
    r.value = curve.p_monotone[i];
    if (source == CapSource::simulated) r.seed = cfg.seed;
    rows.push_back(r);
    CsvRow rr = shape_row(base + "_raw", s);
    rr.value = curve.p_raw[i];
    if (source == CapSource::simulated) rr.seed = cfg.seed;
    rows.push_back(rr);
  }
  write_csv(artifact_path(cfg, "crofton.csv"), rows);
  return 0;
}

inline int run_ag_bound(const RunConfig& cfg) {
  BlockShape shape{cfg.d, cfg.k, cfg.n, cfg.d * cfg.k};
  auto [m_lo, m_hi] = cfg.m_range.empty()
                          ? std::pair<int, int>{cfg.d * cfg.k, cfg.d * cfg.n}
                          : parse_m_range(cfg.m_range);
  std::vector<CsvRow> rows;
  for (int m = m_lo; m <= m_hi; ++m) {
    shape.M = m;
    const AgBoundResult ag = p_ub_ag(shape);
    CsvRow r = shape_row("p_ub_ag", shape);
    r.value = ag.p_ub_ag;
    r.param_lambda = ag.lambda;
    r.param_t1 = ag.t1;
    rows.push_back(r);
  }
  write_csv(artifact_path(cfg, "ag_bound.csv"), rows);
  return 0;
}

inline int run_simulate(const RunConfig& cfg) {
  BlockShape shape{cfg.d, cfg.k, cfg.n, cfg.d * cfg.k};
  auto [m_lo, m_hi] = cfg.m_range.empty()
                          ? std::pair<int, int>{cfg.d * cfg.k, cfg.d * cfg.n}
                          : parse_m_range(cfg.m_range);
  const long long trials = cfg.trials > 0 ? cfg.trials : 10000;
  std::vector<CsvRow> rows;
  for (int m = m_lo; m <= m_hi; ++m) {
    shape.M = m;
    const SimReport rep = estimate_perr(shape, trials, cfg.seed, cfg.threads);
    if (rep.indeterminate > 0) {
      std::cerr << "simulate: M=" << m << ": " << rep.indeterminate
                << " indeterminate (non-converged) trials counted as failures\n";
    }
    CsvRow r = shape_row("p_sim", shape);
    r.value = rep.p_hat;
    r.ci_low = rep.ci_low;
    r.ci_high = rep.ci_high;
    r.seed = cfg.seed;
    rows.push_back(r);
  }
  write_csv(artifact_path(cfg, "simulate.csv"), rows);
  return 0;
}

inline int run_reproduce_table(const RunConfig& cfg) {
  std::vector<CsvRow> rows;
  const auto rate_rows = [&](bool upper, int d, const std::vector<double>& alphas) {
    for (double a : alphas) {
      const RateBound rb =
          upper ? rate_upper(a, 1.0 / 3.0, d) : rate_lower(a, 1.0 / 3.0, d);
      CsvRow r;
      r.quantity = upper ? "rate_upper" : "rate_lower";
      r.d = d;
      r.alpha = a;
      r.beta = 1.0 / 3.0;
      r.value = rb.exponent;
      fill_params(r, rb.params, false);
      rows.push_back(r);
    }
  };
  const auto cap_rows = [&](int d, const std::vector<double>& eps_list) {
    const BlockShape shape{d, 6, 18, d * 6};
    const long long trials = cfg.trials > 0 ? cfg.trials : 100000;
    std::vector<SimReport> sims;
    cap_measure_curve(shape, eps_list, trials, cfg.seed, cfg.threads, &sims);
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
      const CapBoundResult cb = cap_bound(shape, eps_list[i]);
      CsvRow rb = shape_row("cap_bound", shape);
      rb.eps = eps_list[i];
      rb.value = cb.bound;
      rb.param_lambda = cb.lambda;
      rows.push_back(rb);
      CsvRow rs = shape_row("cap_sim", shape);
      rs.eps = eps_list[i];
      rs.value = sims[i].p_hat;
      rs.ci_low = sims[i].ci_low;
      rs.ci_high = sims[i].ci_high;
      rs.seed = cfg.seed;
      rows.push_back(rs);
    }
  };
  switch (cfg.index) {
    case 1:
      rate_rows(true, 2, {0.65, 0.71, 0.77, 0.83, 0.89});
      break;
    case 2:
      rate_rows(true, 10, {0.59, 0.64, 0.69, 0.74, 0.79});
      break;
    case 3:
      rate_rows(false, 2, {0.57, 0.53, 0.49, 0.45, 0.41});
      break;
    case 4:
      rate_rows(false, 10, {0.55, 0.51, 0.47, 0.43, 0.39});
      break;
    case 5:
      cap_rows(2, {0.5, 0.6, 0.7, 0.8, 0.9});
      break;
    case 6:
      cap_rows(10, {0.6, 0.65, 0.7, 0.75, 0.8});
      break;
    default:
      throw ConfigError("reproduce-table expects a table number in 1..6");
  }
  write_csv(artifact_path(cfg, "table" + std::to_string(cfg.index) + ".csv"),
            rows);
  return 0;
}

inline int run_reproduce_figure(const RunConfig& cfg) {
  const std::string stem = "figure" + std::to_string(cfg.index);
  std::vector<CsvRow> rows;
  std::vector<PlotSeries> series;

  const auto rate_series = [&](bool upper, int d, double a_lo, double a_hi) {
    PlotSeries s;
    s.name = (upper ? std::string("I_err d=") : std::string("I_cor d=")) +
             std::to_string(d);
    for (double a = a_lo; a <= a_hi + 1e-9; a += 0.02) {
      const RateBound rb =
          upper ? rate_upper(a, 1.0 / 3.0, d) : rate_lower(a, 1.0 / 3.0, d);
      s.x.push_back(a);
      s.y.push_back(rb.exponent);
      CsvRow r;
      r.quantity = upper ? "rate_upper" : "rate_lower";
      r.d = d;
      r.alpha = a;
      r.beta = 1.0 / 3.0;
      r.value = rb.exponent;
      fill_params(r, rb.params, false);
      rows.push_back(r);
    }
    series.push_back(std::move(s));
  };

  const auto pnum_series = [&](const BlockShape& shape, double eps_step,
                               bool normalize_m) {
    const std::vector<double> eps = parse_eps_range(
        "0.4:1.0:" + std::to_string(eps_step));
    PipelineOptions opts;
    if (cfg.trials > 0) opts.sim_trials = cfg.trials;
    opts.seed = cfg.seed;
    opts.threads = cfg.threads;
    const int dn = shape.ambient_dim();
    const PerrCurve curve = perr_pipeline(shape, eps, CapSource::simulated,
                                          shape.d * shape.k, dn, opts);
    PlotSeries s;
    s.name = "p_num n=" + std::to_string(shape.n);
    for (std::size_t i = 0; i < curve.m_values.size(); ++i) {
      const double x = normalize_m
                           ? static_cast<double>(curve.m_values[i]) / dn
                           : static_cast<double>(curve.m_values[i]);
      s.x.push_back(x);
      s.y.push_back(curve.p_monotone[i]);
      BlockShape sh = shape;
      sh.M = curve.m_values[i];
      CsvRow r = shape_row("p_num", sh);
      r.value = curve.p_monotone[i];
      r.seed = cfg.seed;
      rows.push_back(r);
    }
    series.push_back(std::move(s));
  };

  switch (cfg.index) {
    case 1: {
      for (int d : {2, 10}) {
        std::vector<double> betas;
        for (int i = 1; i <= 49; ++i) betas.push_back(0.02 * i);
        const PTCurve curve = pt_curve(d, betas);
        PlotSeries s;
        s.name = "alpha_w d=" + std::to_string(d);
        for (const PTPoint& p : curve.points) {
          s.x.push_back(p.beta_w);
          s.y.push_back(p.alpha_w);
          CsvRow r;
          r.quantity = "alpha_weak";
          r.d = d;
          r.alpha = p.alpha_w;
          r.beta = p.beta_w;
          r.value = p.alpha_w;
          rows.push_back(r);
        }
        series.push_back(std::move(s));
      }
      emit_plot(series, detail::artifact_path(cfg, stem + ".svg"), "beta",
                "alpha_w");
      break;
    }
    case 2:
      rate_series(true, 2, 0.65, 0.95);
      rate_series(true, 10, 0.59, 0.95);
      emit_plot(series, detail::artifact_path(cfg, stem + ".svg"), "alpha",
                "rate exponent");
      break;
    case 3:
      rate_series(false, 2, 0.31, 0.57);
      rate_series(false, 10, 0.31, 0.55);
      emit_plot(series, detail::artifact_path(cfg, stem + ".svg"), "alpha",
                "rate exponent");
      break;
    case 4: {
      const BlockShape shape{2, 6, 18, 12};
      const int m_lo = 13, m_hi = 35;
      const long long sim_trials = cfg.trials > 0 ? cfg.trials : 1000;
      PlotSeries s_sim{"p_sim", {}, {}};
      PlotSeries s_ub{"p_ub_ldp", {}, {}};
      BlockShape sh = shape;
      for (int m = m_lo; m <= m_hi; ++m) {
        sh.M = m;
        const SimReport rep = estimate_perr(sh, sim_trials, cfg.seed, cfg.threads);
        s_sim.x.push_back(m);
        s_sim.y.push_back(rep.p_hat);
        CsvRow r = shape_row("p_sim", sh);
        r.value = rep.p_hat;
        r.ci_low = rep.ci_low;
        r.ci_high = rep.ci_high;
        r.seed = cfg.seed;
        rows.push_back(r);
        const FiniteBound fb = finite_perr_upper(sh);
        s_ub.x.push_back(m);
        s_ub.y.push_back(fb.bound);
        CsvRow ru = shape_row("p_ub_ldp", sh);
        ru.value = fb.bound;
        fill_params(ru, fb.params, false);
        rows.push_back(ru);
      }
      const std::vector<double> eps = parse_eps_range("0.4:1.0:0.01");
      PipelineOptions opts;
      opts.seed = cfg.seed;
      opts.threads = cfg.threads;
      PlotSeries s_num{"p_num", {}, {}};
      const PerrCurve num =
          perr_pipeline(shape, eps, CapSource::simulated, m_lo, m_hi, opts);
      PlotSeries s_apx{"p_apx", {}, {}};
      const PerrCurve apx =
          perr_pipeline(shape, eps, CapSource::analytic_bound, m_lo, m_hi, opts);
      for (std::size_t i = 0; i < num.m_values.size(); ++i) {
        sh.M = num.m_values[i];
        s_num.x.push_back(sh.M);
        s_num.y.push_back(num.p_monotone[i]);
        CsvRow rn = shape_row("p_num", sh);
        rn.value = num.p_monotone[i];
        rn.seed = cfg.seed;
        rows.push_back(rn);
        s_apx.x.push_back(sh.M);
        s_apx.y.push_back(apx.p_monotone[i]);
        CsvRow ra = shape_row("p_apx", sh);
        ra.value = apx.p_monotone[i];
        rows.push_back(ra);
      }
      series = {s_sim, s_num, s_apx, s_ub};
      emit_plot(series, detail::artifact_path(cfg, stem + ".svg"), "M",
                "P_err");
      break;
    }
    case 5:
      pnum_series(BlockShape{2, 6, 18, 12}, 0.01, true);
      pnum_series(BlockShape{2, 24, 72, 48}, 0.004, true);
      emit_plot(series, detail::artifact_path(cfg, stem + ".svg"), "M/(d n)",
                "P_err");
      break;
    case 6: {
      BlockShape sh{2, 6, 18, 12};
      const int m_lo = 13, m_hi = 35;
      PlotSeries s_ag{"p_ub_ag", {}, {}};
      PlotSeries s_ub{"p_ub_ldp", {}, {}};
      for (int m = m_lo; m <= m_hi; ++m) {
        sh.M = m;
        const AgBoundResult ag = p_ub_ag(sh);
        s_ag.x.push_back(m);
        s_ag.y.push_back(ag.p_ub_ag);
        CsvRow r = shape_row("p_ub_ag", sh);
        r.value = ag.p_ub_ag;
        r.param_lambda = ag.lambda;
        r.param_t1 = ag.t1;
        rows.push_back(r);
        const FiniteBound fb = finite_perr_upper(sh);
        s_ub.x.push_back(m);
        s_ub.y.push_back(fb.bound);
        CsvRow ru = shape_row("p_ub_ldp", sh);
        ru.value = fb.bound;
        fill_params(ru, fb.params, false);
        rows.push_back(ru);
      }
      series = {s_ag, s_ub};
      emit_plot(series, detail::artifact_path(cfg, stem + ".svg"), "M",
                "P_err");
      break;
    }
    default:
      throw ConfigError("reproduce-figure expects a figure number in 1..6");
  }
  write_csv(artifact_path(cfg, stem + ".csv"), rows);
  return 0;
}

}  // namespace detail

/// Executes one configured run. Returns the process exit status: 0 success,
/// 2 configuration error, 3 numeric failure (the failing operation is named
/// on standard error in both cases).
inline int run(const RunConfig& cfg) {
  try {
    if (cfg.command == "pt-curve") return detail::run_pt_curve(cfg);
    if (cfg.command == "ldp-upper") return detail::run_ldp(cfg, true);
    if (cfg.command == "ldp-lower") return detail::run_ldp(cfg, false);
    if (cfg.command == "finite-bound") return detail::run_finite_bound(cfg);
    if (cfg.command == "cap-measure") return detail::run_cap_measure(cfg);
    if (cfg.command == "crofton") return detail::run_crofton(cfg);
    if (cfg.command == "ag-bound") return detail::run_ag_bound(cfg);
    if (cfg.command == "simulate") return detail::run_simulate(cfg);
    if (cfg.command == "reproduce-table") return detail::run_reproduce_table(cfg);
    if (cfg.command == "reproduce-figure") return detail::run_reproduce_figure(cfg);
    throw ConfigError("unknown command '" + cfg.command + "'");
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace blockspt
