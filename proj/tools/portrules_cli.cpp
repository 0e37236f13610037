// portrules: batch front end for fitting, allocation, worst-case,
// precision and long-term reports.

#include "portrules/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv)
{
    using namespace portrules;
    cli::RunConfig cfg;
    std::string period;

    CLI::App app{"Allocation rules for asymmetric Laplace and Gaussian returns", "portrules"};
    app.set_version_flag("--version", std::string(PORTRULES_VERSION));
    app.set_config("--config", "", "key = value file; command-line flags take precedence");
    app.require_subcommand(1);
    for (const char* name : {"fit", "allocate", "worstcase", "precision", "longterm"})
        app.add_subcommand(name)->fallthrough();
    app.get_subcommand("fit")->description("Fit ALD parameters per asset and period");
    app.get_subcommand("allocate")->description("Weights for a single-period allocation rule");
    app.get_subcommand("worstcase")->description("Worst-case (minimax) weights on the simplex");
    app.get_subcommand("precision")->description("Adjacency-constrained precision and covariance matrices");
    app.get_subcommand("longterm")->description("Ranked long-horizon CRRA objectives");

    app.add_option("--input", cfg.input, "Price CSV (date column plus one column per asset)");
    app.add_option("--date-column", cfg.date_column, "Name of the date column (default: first column)");
    app.add_option("--period", period, "Return period D, W or M");
    app.add_option("--rule", cfg.rule, "Allocation rule");
    app.add_option("--a", cfg.a, "CARA risk aversion");
    app.add_option("--b", cfg.b, "MM trade-off constant");
    app.add_option("--neff", cfg.neff, "Target N_eff / N in (0, 1]");
    app.add_option("--adjacency", cfg.adjacency, "0/1 adjacency CSV with asset header row and column");
    app.add_option("--sector-map", cfg.sector_map, "asset,sector CSV");
    app.add_option("--seed", cfg.seed, "Random seed");
    app.add_option("--out", cfg.out, "Output directory");
    app.add_option("--clip", cfg.clip, "Post-processing: long-only or none")->check(CLI::IsMember({"long-only", "none"}));
    app.add_option("--method", cfg.method, "Fit method: mle or metropolis")->check(CLI::IsMember({"mle", "metropolis"}));
    app.add_option("--iterations", cfg.iterations, "Metropolis iterations");
    app.add_option("--assets", cfg.assets, "Asset names for explicit parameter lists")->delimiter(',');
    app.add_option("--mu", cfg.mu, "Locations")->delimiter(',');
    app.add_option("--sigma", cfg.sigma, "Scales or volatilities")->delimiter(',');
    app.add_option("--kappa", cfg.kappa, "ALD skewness per asset")->delimiter(',');
    app.add_option("--mu0", cfg.mu0, "Prior location means")->delimiter(',');
    app.add_option("--sigma0", cfg.sigma0, "Prior location deviations")->delimiter(',');
    app.add_option("--cov", cfg.cov, "Covariance or scale matrix CSV");
    app.add_option("--r0", cfg.r0, "Cash return");
    app.add_option("--mu-d", cfg.mu_d, "GBM drift means")->delimiter(',');
    app.add_option("--sigma-d", cfg.sigma_d, "GBM drift deviations")->delimiter(',');
    app.add_option("--vol", cfg.vol, "GBM volatilities")->delimiter(',');
    app.add_option("--horizon", cfg.horizon, "GBM horizon T");
    app.add_option("--gamma", cfg.gamma, "CRRA relative risk aversion");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? cli::exit_ok : cli::exit_input;
    }

    try
    {
        cfg.command = app.get_subcommands().front()->get_name();
        if (!period.empty())
            cfg.period = parse_period(period);
        cli::dispatch(cfg);
    }
    catch (const Error& e)
    {
        std::fprintf(stderr, "portrules: %s: %s\n", to_string(e.code()), e.what());
        return cli::exit_code_for(e.code());
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "portrules: %s\n", e.what());
        return cli::exit_numeric;
    }
    return cli::exit_ok;
}
