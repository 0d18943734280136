// Command-line front end for the block-sparse recovery toolkit: phase
// transitions, rate-function bounds, finite-size error-probability bounds,
// cap-measure estimation, and table/figure reproduction sweeps.

#include <string>

#include "CLI11.hpp"
#include "blockspt/cli.hpp"

int main(int argc, char** argv) {
  blockspt::RunConfig cfg;

  CLI::App app{
      "blockspt: phase transitions, large-deviation rates, and finite-size\n"
      "error bounds for block-sparse l2/l1 recovery from Gaussian measurements"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file (flags override)");

  app.add_option("--out", cfg.out_dir, "output directory for CSV/SVG artifacts");
  app.add_option("--trials", cfg.trials, "Monte Carlo trial count");
  app.add_option("--seed", cfg.seed, "base RNG seed");
  app.add_option("--d", cfg.d, "block length d");
  app.add_option("--k", cfg.k, "number of nonzero blocks k");
  app.add_option("--n", cfg.n, "number of blocks n");
  app.add_option("--m-range", cfg.m_range, "measurement sweep LO:HI");
  app.add_option("--alpha", cfg.alpha, "measurement ratio M/(d n)");
  app.add_option("--beta", cfg.beta, "sparsity ratio k/n");
  app.add_option("--eps-range", cfg.eps_range, "angle grid LO:HI:STEP");
  app.add_option("--threads", cfg.threads,
                 "worker threads (0 = auto; BLOCKSPT_THREADS overrides)");
  app.add_option("--source", cfg.source,
                 "cap-curve source for crofton: simulated | analytic")
      ->check(CLI::IsMember({"simulated", "analytic"}));

  app.add_subcommand("pt-curve",
                     "weak phase-transition curve alpha_w(beta) for fixed d");
  app.add_subcommand("ldp-upper",
                     "failure-rate exponent above the transition at --alpha");
  app.add_subcommand("ldp-lower",
                     "success-rate exponent below the transition at --alpha");
  app.add_subcommand("finite-bound",
                     "finite-size Chernoff bounds on P_err and P_cor over M");
  app.add_subcommand("cap-measure",
                     "cap-extension measures: analytic bound and simulation");
  app.add_subcommand("crofton",
                     "error-probability curve from regressed intrinsic volumes");
  app.add_subcommand("ag-bound",
                     "error-probability upper bound via the added Gaussian term");
  app.add_subcommand("simulate", "direct Monte Carlo recovery error estimates");
  auto* rt = app.add_subcommand("reproduce-table",
                                "recompute one of the six reference tables");
  rt->add_option("N", cfg.index, "table number (1-6)")->required();
  auto* rf = app.add_subcommand("reproduce-figure",
                                "recompute one of the six reference figures");
  rf->add_option("N", cfg.index, "figure number (1-6)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  return blockspt::run(cfg);
}
