/**
 * @file cli.hpp
 * @brief Batch commands behind the `portrules` executable. Each command
 * reads a RunConfig, writes CSV reports into the output directory and
 * returns nothing; failures surface as portrules::Error.
 */

#pragma once

#include "portrules/ald.hpp"
#include "portrules/alloc_multi.hpp"
#include "portrules/alloc_uni.hpp"
#include "portrules/error.hpp"
#include "portrules/longterm.hpp"
#include "portrules/precision.hpp"
#include "portrules/returns_io.hpp"
#include "portrules/worstcase.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef PORTRULES_VERSION
#define PORTRULES_VERSION "0.0.0"
#endif

namespace portrules::cli
{

    struct RunConfig
    {
        std::string command;
        std::string input;
        std::string date_column;
        std::optional<Period> period;
        std::string rule;
        double a = 1.0;
        std::optional<double> b;
        std::optional<double> neff;
        std::string adjacency;
        std::string sector_map;
        std::uint64_t seed = 0;
        std::string out = ".";
        std::string clip = "none";
        std::string method = "mle";
        std::size_t iterations = 20000;
        std::vector<std::string> assets;
        std::vector<double> mu, sigma, kappa, mu0, sigma0;
        std::string cov;
        double r0 = 0.0;
        std::vector<double> mu_d, sigma_d, vol;
        double horizon = 1.0;
        double gamma = 1.0;

        /// Stable `key=value` rendering used for the config hash.
        std::string canonical() const
        {
            std::ostringstream os;
            auto list = [&](const char* key, const std::vector<double>& v) {
                os << key << '=';
                for (std::size_t i = 0; i < v.size(); ++i)
                    os << (i ? "," : "") << fmt(v[i]);
                os << '\n';
            };
            os << "command=" << command << '\n'
               << "input=" << input << '\n'
               << "date_column=" << date_column << '\n'
               << "period=" << (period ? period_code(*period) : '-') << '\n'
               << "rule=" << rule << '\n'
               << "a=" << fmt(a) << '\n'
               << "b=" << (b ? fmt(*b) : "-") << '\n'
               << "neff=" << (neff ? fmt(*neff) : "-") << '\n'
               << "adjacency=" << adjacency << '\n'
               << "sector_map=" << sector_map << '\n'
               << "seed=" << seed << '\n'
               << "clip=" << clip << '\n'
               << "method=" << method << '\n'
               << "iterations=" << iterations << '\n'
               << "cov=" << cov << '\n'
               << "r0=" << fmt(r0) << '\n'
               << "horizon=" << fmt(horizon) << '\n'
               << "gamma=" << fmt(gamma) << '\n';
            os << "assets=";
            for (std::size_t i = 0; i < assets.size(); ++i)
                os << (i ? "," : "") << assets[i];
            os << '\n';
            list("mu", mu);
            list("sigma", sigma);
            list("kappa", kappa);
            list("mu0", mu0);
            list("sigma0", sigma0);
            list("mu_d", mu_d);
            list("sigma_d", sigma_d);
            list("vol", vol);
            return os.str();
        }

        static std::string fmt(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }
    };

    /// 64-bit FNV-1a.
    inline std::uint64_t fnv1a(const std::string& s)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s)
        {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    inline std::string header_line(const RunConfig& cfg)
    {
        char buf[96];
        std::snprintf(buf, sizeof buf, "# portrules %s config_hash=%016llx seed=%llu", PORTRULES_VERSION,
                      static_cast<unsigned long long>(fnv1a(cfg.canonical())),
                      static_cast<unsigned long long>(cfg.seed));
        return buf;
    }

    inline std::string num(double v) { return RunConfig::fmt(v); }

    inline std::string num6(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return buf;
    }

    namespace detail
    {
        inline std::ofstream open_report(const RunConfig& cfg, const std::string& name)
        {
            std::filesystem::create_directories(cfg.out);
            const auto path = std::filesystem::path(cfg.out) / name;
            std::ofstream os(path);
            if (!os)
                throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
            os << header_line(cfg) << '\n';
            return os;
        }

        inline Eigen::VectorXd to_vector(const std::vector<double>& v)
        {
            return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }

        inline std::vector<std::string> asset_names(const RunConfig& cfg, std::size_t n)
        {
            if (!cfg.assets.empty())
            {
                if (cfg.assets.size() != n)
                    throw Error(Errc::invalid_argument, "--assets count disagrees with the parameter lists");
                return cfg.assets;
            }
            std::vector<std::string> out;
            for (std::size_t i = 0; i < n; ++i)
                out.push_back("A" + std::to_string(i));
            return out;
        }

        inline ReturnPanel load_returns(const RunConfig& cfg, Period period)
        {
            CsvSchema schema;
            schema.date_column = cfg.date_column;
            return to_returns(load_csv(cfg.input, schema), period);
        }

        /// Matrix CSV: header `,<id>...` and rows `<id>,v...`.
        inline Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>& names)
        {
            std::ifstream in(path);
            if (!in)
                throw Error(Errc::io_error, "cannot open '" + path + "'");
            std::string line;
            std::vector<std::vector<double>> rows;
            names.clear();
            bool header = true;
            while (std::getline(in, line))
            {
                const auto t = portrules::detail::trim(line);
                if (t.empty() || t.front() == '#')
                    continue;
                const auto cells = portrules::detail::split(t, ',');
                if (header)
                {
                    for (std::size_t j = 1; j < cells.size(); ++j)
                        names.emplace_back(portrules::detail::trim(cells[j]));
                    header = false;
                    continue;
                }
                if (cells.size() != names.size() + 1)
                    throw Error(Errc::invalid_argument, "matrix row has the wrong number of cells in " + path);
                std::vector<double> vals;
                for (std::size_t j = 1; j < cells.size(); ++j)
                {
                    double v = 0.0;
                    if (!portrules::detail::parse_double(portrules::detail::trim(cells[j]), v))
                        throw Error(Errc::invalid_argument, "unparseable matrix entry in " + path);
                    vals.push_back(v);
                }
                rows.push_back(std::move(vals));
            }
            if (rows.size() != names.size() || rows.empty())
                throw Error(Errc::invalid_argument, "matrix in " + path + " is not square");
            const auto n = static_cast<Eigen::Index>(rows.size());
            Eigen::MatrixXd m(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            return m;
        }

        inline void write_matrix_rows(std::ostream& os, const std::string& variant, const Eigen::MatrixXd& m,
                                      const std::vector<std::string>& names)
        {
            for (Eigen::Index i = 0; i < m.rows(); ++i)
            {
                os << variant << ',' << names[static_cast<std::size_t>(i)];
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    os << ',' << num(m(i, j));
                os << '\n';
            }
        }

        inline void write_matrix_header(std::ostream& os, const std::vector<std::string>& names)
        {
            os << "variant,asset";
            for (const auto& n : names)
                os << ',' << n;
            os << '\n';
        }

        /// Covariance for the multi-asset commands: --cov file, else returns
        /// from --input, else diag(sigma^2).
        inline Eigen::MatrixXd resolve_covariance(const RunConfig& cfg, std::vector<std::string>& names)
        {
            if (!cfg.cov.empty())
                return read_matrix_csv(cfg.cov, names);
            if (!cfg.input.empty())
            {
                const auto panel = load_returns(cfg, cfg.period.value_or(Period::daily));
                names = panel.assets;
                const Eigen::MatrixXd x = panel.aligned();
                if (x.rows() < 2)
                    throw Error(Errc::insufficient_data, "fewer than two common return observations");
                return sample_covariance(x);
            }
            if (cfg.sigma.empty())
                throw Error(Errc::invalid_argument, "need --cov, --input or --sigma for a covariance");
            names = asset_names(cfg, cfg.sigma.size());
            const Eigen::VectorXd s = to_vector(cfg.sigma);
            return Eigen::MatrixXd(s.cwiseAbs2().asDiagonal());
        }

        inline std::vector<double> histogram_edges(double lo, double hi, int bins)
        {
            std::vector<double> e(static_cast<std::size_t>(bins) + 1);
            for (int i = 0; i <= bins; ++i)
                e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
            return e;
        }
    } // namespace detail

    /// Per-asset ALD fits for daily, weekly and monthly returns (or the one
    /// period requested), the scaling-law summary and density curves.
    inline void cmd_fit(const RunConfig& cfg)
    {
        if (cfg.method != "mle" && cfg.method != "metropolis")
            throw Error(Errc::invalid_argument, "--method must be mle or metropolis");
        CsvSchema schema;
        schema.date_column = cfg.date_column;
        const auto prices = load_csv(cfg.input, schema);
        std::vector<Period> periods{Period::daily, Period::weekly, Period::monthly};
        if (cfg.period)
            periods = {*cfg.period};

        auto params = detail::open_report(cfg, "ald_params.csv");
        params << "asset,period,mu,sigma,kappa,loglik\n";
        struct Fitted
        {
            std::string asset;
            Period period;
            AldParams p;
        };
        std::vector<Fitted> fitted;

        for (const auto period : periods)
        {
            std::optional<ReturnPanel> panel;
            try
            {
                panel = to_returns(prices, period);
            }
            catch (const Error& e)
            {
                if (e.code() != Errc::insufficient_data)
                    throw;
                params << "# skipped period " << period_code(period) << ": " << to_string(e.code()) << '\n';
                continue;
            }
            for (std::size_t i = 0; i < panel->asset_count(); ++i)
            {
                const auto series = panel->series(i);
                const auto& name = panel->assets[i];
                try
                {
                    AldParams p = cfg.method == "mle"
                                      ? fit_ald_mle(series).params
                                      : fit_ald_metropolis(series, cfg.iterations, cfg.seed + i).posterior_mean;
                    double ll = 0.0;
                    for (double x : series)
                        ll += ald_log_pdf(x, p);
                    params << name << ',' << period_code(period) << ',' << num6(p.mu) << ',' << num6(p.sigma) << ','
                           << num6(p.kappa) << ',' << num6(ll) << '\n';
                    fitted.push_back({name, period, p});

                    // Density curves: normalized histogram against the fitted pdf.
                    constexpr int bins = 50;
                    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
                    const auto edges = detail::histogram_edges(*lo_it, *hi_it, bins);
                    std::vector<double> counts(bins, 0.0);
                    const double width = (*hi_it - *lo_it) / bins;
                    for (double x : series)
                    {
                        auto k = static_cast<int>((x - *lo_it) / width);
                        counts[static_cast<std::size_t>(std::clamp(k, 0, bins - 1))] += 1.0;
                    }
                    auto pdf = detail::open_report(cfg, "pdf_" + name + "_" + period_code(period) + ".csv");
                    pdf << "x,empirical,fitted\n";
                    for (int k = 0; k < bins; ++k)
                    {
                        const double x = 0.5 * (edges[static_cast<std::size_t>(k)] + edges[static_cast<std::size_t>(k) + 1]);
                        const double emp = counts[static_cast<std::size_t>(k)] / (series.size() * width);
                        pdf << num(x) << ',' << num(emp) << ',' << num(ald_pdf(x, p)) << '\n';
                    }
                }
                catch (const Error& e)
                {
                    if (e.code() != Errc::insufficient_data && e.code() != Errc::degenerate_data)
                        throw;
                    params << "# skipped " << name << ' ' << period_code(period) << ": " << to_string(e.code())
                           << " (" << series.size() << " returns)\n";
                }
            }
        }

        auto scaling = detail::open_report(cfg, "scaling.csv");
        scaling << "asset,quantity,exponent,intercept,r2\n";
        std::vector<std::string> names;
        for (const auto& f : fitted)
            if (std::find(names.begin(), names.end(), f.asset) == names.end())
                names.push_back(f.asset);
        for (const auto& name : names)
        {
            std::vector<double> t, s, m;
            for (const auto& f : fitted)
                if (f.asset == name)
                {
                    t.push_back(trading_days(f.period));
                    s.push_back(f.p.sigma);
                    m.push_back(f.p.mu);
                }
            for (const auto& [label, values] : {std::pair{"sigma", &s}, std::pair{"mu", &m}})
            {
                try
                {
                    const auto law = fit_scaling_law(t, *values);
                    scaling << name << ',' << label << ',' << num(law.exponent) << ',' << num(law.intercept) << ','
                            << num(law.r2) << '\n';
                }
                catch (const Error& e)
                {
                    scaling << "# " << name << ' ' << label << ": " << to_string(e.code()) << '\n';
                }
            }
        }
        for (const auto period : periods)
        {
            std::vector<AldParams> ps;
            for (const auto& f : fitted)
                if (f.period == period)
                    ps.push_back(f.p);
            try
            {
                const auto rel = fit_kappa_relation(ps);
                scaling << "all_" << period_code(period) << ",kappa_relation," << num(rel.a) << ',' << num(rel.b)
                        << ',' << num(rel.r2) << '\n';
            }
            catch (const Error& e)
            {
                scaling << "# kappa relation " << period_code(period) << ": " << to_string(e.code()) << '\n';
            }
        }
    }

    inline const std::vector<std::string>& allocation_rules()
    {
        static const std::vector<std::string> rules{"markowitz",  "ald",    "markowitz-marginal", "ald-marginal",
                                                    "gaussian-mv", "ald-mv", "ald-mv-marginal"};
        return rules;
    }

    /// Weights for one of the allocation rules from explicit parameters.
    inline void cmd_allocate(const RunConfig& cfg)
    {
        const auto& rules = allocation_rules();
        if (std::find(rules.begin(), rules.end(), cfg.rule) == rules.end())
            throw Error(Errc::unknown_rule, "unknown rule '" + cfg.rule + "'");
        if (cfg.clip != "none" && cfg.clip != "long-only")
            throw Error(Errc::invalid_argument, "--clip must be long-only or none");
        const RiskAversion a(cfg.a);
        const bool marginal = cfg.rule.ends_with("marginal");
        const bool multi = cfg.rule.ends_with("-mv") || cfg.rule == "ald-mv-marginal";
        const auto& loc = marginal ? cfg.mu0 : cfg.mu;
        if (loc.empty())
            throw Error(Errc::invalid_argument, marginal ? "rule needs --mu0" : "rule needs --mu");
        const std::size_t n = loc.size();
        if (marginal && cfg.sigma0.size() != n)
            throw Error(Errc::invalid_argument, "--sigma0 must have one entry per asset");
        std::vector<double> kappa = cfg.kappa.empty() ? std::vector<double>(n, 1.0) : cfg.kappa;
        if (kappa.size() != n)
            throw Error(Errc::invalid_argument, "--kappa must have one entry per asset");

        struct Row
        {
            double w;
            double objective;
            std::string branch;
            std::optional<double> margin;
        };
        std::vector<Row> rows;
        std::vector<std::string> names;
        std::string extra;

        if (!multi)
        {
            if (cfg.sigma.size() != n)
                throw Error(Errc::invalid_argument, "--sigma must have one entry per asset");
            names = detail::asset_names(cfg, n);
            for (std::size_t i = 0; i < n; ++i)
            {
                UniAllocation u;
                std::optional<double> margin;
                if (cfg.rule == "markowitz")
                    u = markowitz_weight(cfg.mu[i], cfg.sigma[i], cfg.r0, a);
                else if (cfg.rule == "markowitz-marginal")
                    u = markowitz_weight_marginal(LocationPrior(cfg.mu0[i], cfg.sigma0[i]), cfg.sigma[i], cfg.r0, a);
                else
                {
                    const AldParams p(marginal ? cfg.mu0[i] : cfg.mu[i], cfg.sigma[i], kappa[i]);
                    u = marginal ? ald_weight_marginal(LocationPrior(cfg.mu0[i], cfg.sigma0[i]), p, cfg.r0, a)
                                 : ald_weight(p, cfg.r0, a);
                    margin = ald_domain_value(u.w, p.sigma, p.mu_a(), a.value());
                }
                rows.push_back({u.w, u.objective, to_string(u.branch), margin});
            }
        }
        else
        {
            Eigen::MatrixXd sigma = detail::resolve_covariance(cfg, names);
            if (static_cast<std::size_t>(sigma.rows()) != n)
                throw Error(Errc::invalid_argument, "covariance size disagrees with the location list");
            if (!cfg.assets.empty())
                names = detail::asset_names(cfg, n);
            Eigen::VectorXd m = detail::to_vector(loc);
            m.array() -= cfg.r0;
            WeightVector wv;
            std::string branch;
            if (cfg.rule == "gaussian-mv")
            {
                wv = gaussian_weights(MultiGaussian(m, sigma), a);
                branch = "closed_form";
            }
            else if (cfg.rule == "ald-mv")
            {
                const MultiAld model(m, sigma, detail::to_vector(kappa));
                wv = model.symmetric() ? ald_weights_symmetric(model, a) : ald_weights(model, a);
                branch = model.symmetric() ? "closed_form" : "newton";
            }
            else
            {
                const MultiAld model(m, sigma, detail::to_vector(kappa));
                const Eigen::VectorXd s0 = detail::to_vector(cfg.sigma0);
                wv = ald_weights_marginal(model, MultiPrior(m, s0.cwiseAbs2()), a);
                branch = "newton";
            }
            extra = "# residual=" + num(wv.residual) + " iterations=" + std::to_string(wv.iterations) +
                    " restarts=" + std::to_string(wv.restarts) + "\n";
            for (std::size_t i = 0; i < n; ++i)
                rows.push_back({wv.w(static_cast<Eigen::Index>(i)), wv.objective, branch,
                                cfg.rule == "gaussian-mv" ? std::nullopt : std::optional<double>(wv.margin)});
        }

        auto os = detail::open_report(cfg, "weights.csv");
        os << "# rule=" << cfg.rule << " a=" << num(cfg.a) << " r0=" << num(cfg.r0) << " clip=" << cfg.clip << '\n'
           << extra;
        os << "asset,weight,objective,branch,margin\n";
        for (std::size_t i = 0; i < n; ++i)
        {
            const double w = cfg.clip == "long-only" ? std::max(rows[i].w, 0.0) : rows[i].w;
            os << names[i] << ',' << num(w) << ',' << num(rows[i].objective) << ',' << rows[i].branch << ','
               << (rows[i].margin ? num(*rows[i].margin) : std::string()) << '\n';
        }
    }

    /// Worst-case weights: risk-neutral (no covariance), MM with a given b,
    /// b from an N_eff target or the entropy heuristic, or the ALD variant
    /// with --rule ald.
    inline void cmd_worstcase(const RunConfig& cfg)
    {
        const bool has_prior = !cfg.mu0.empty() || !cfg.sigma0.empty();
        if (has_prior && cfg.mu0.size() != cfg.sigma0.size())
            throw Error(Errc::invalid_argument, "--mu0 and --sigma0 need the same length");
        const bool has_cov = !cfg.cov.empty() || !cfg.input.empty() || !cfg.sigma.empty();

        std::vector<std::string> names;
        std::vector<std::pair<std::string, std::string>> summary;
        Eigen::VectorXd w;

        if (!has_cov)
        {
            if (!has_prior)
                throw Error(Errc::invalid_argument, "worstcase needs a covariance or --mu0/--sigma0");
            const auto res = risk_neutral_worstcase(detail::to_vector(cfg.mu0), detail::to_vector(cfg.sigma0));
            names = detail::asset_names(cfg, cfg.mu0.size());
            w = res.weights.w;
            summary = {{"mode", "risk_neutral"},
                       {"c", num(std::abs(expected_min_gaussians(detail::to_vector(cfg.sigma0))))},
                       {"lambda", num(res.kkt.lambda)},
                       {"kkt_residual", num(res.kkt.residual())}};
        }
        else
        {
            const Eigen::MatrixXd sigma = detail::resolve_covariance(cfg, names);
            if (!cfg.assets.empty())
                names = detail::asset_names(cfg, static_cast<std::size_t>(sigma.rows()));
            const auto n = sigma.rows();
            std::optional<WorstCasePrior> prior;
            if (has_prior)
            {
                if (static_cast<Eigen::Index>(cfg.mu0.size()) != n)
                    throw Error(Errc::invalid_argument, "prior length disagrees with covariance");
                prior = WorstCasePrior{detail::to_vector(cfg.mu0), detail::to_vector(cfg.sigma0)};
            }

            if (cfg.rule == "ald")
            {
                if (!cfg.b)
                    throw Error(Errc::invalid_argument, "ALD worst case needs --b");
                const Eigen::VectorXd kappa =
                    cfg.kappa.empty() ? Eigen::VectorXd::Ones(n) : detail::to_vector(cfg.kappa);
                const MultiAld model(Eigen::VectorXd::Zero(n), sigma, kappa);
                std::optional<Eigen::VectorXd> lin;
                if (prior)
                    lin = Eigen::VectorXd(prior->mu0 / std::abs(expected_min_gaussians(prior->sigma0)));
                const auto res = mm_portfolio_ald(model, RiskAversion(cfg.a), *cfg.b, lin);
                w = res.weights.w;
                summary = {{"mode", "mm_ald"},
                           {"b", num(*cfg.b)},
                           {"margin", num(res.margin)},
                           {"gradient_mapping", num(res.residual)}};
            }
            else if (!cfg.rule.empty())
                throw Error(Errc::unknown_rule, "worstcase rules are 'ald' or empty, got '" + cfg.rule + "'");
            else
            {
                double b = 0.0;
                std::string mode;
                std::optional<BStarResult> bstar;
                if (cfg.b)
                {
                    b = *cfg.b;
                    mode = "mm_given_b";
                }
                else if (cfg.neff)
                {
                    bstar = entropy_bstar(sigma, *cfg.neff);
                    b = bstar->b;
                    mode = "mm_neff_target";
                }
                else if (prior)
                {
                    b = cfg.a / std::abs(expected_min_gaussians(prior->sigma0));
                    mode = "mm_from_a";
                }
                else
                {
                    bstar = entropy_bstar(sigma);
                    b = bstar->b;
                    mode = "mm_entropy_heuristic";
                }
                const auto res = mm_portfolio(sigma, b, prior);
                w = res.weights.w;
                summary = {{"mode", mode}, {"b", num(b)}, {"kkt_residual", num(res.kkt.residual())}};
                if (prior)
                {
                    summary.emplace_back("y_min", num(res.y_min));
                    summary.emplace_back("implied_a", num(res.implied_a));
                }
                if (bstar)
                {
                    summary.emplace_back("s_eq", num(bstar->s_eq));
                    summary.emplace_back("s_mv", num(bstar->s_mv));
                    summary.emplace_back("target_entropy", num(bstar->target_entropy));
                    summary.emplace_back("no_bracket", bstar->no_bracket ? "1" : "0");
                }
            }
        }

        const double s = weight_entropy(w);
        summary.emplace_back("r", num(w.maxCoeff()));
        summary.emplace_back("entropy", num(s));
        summary.emplace_back("n_eff", num(std::exp(s)));
        summary.emplace_back("n_eff_fraction", num(std::exp(s) / static_cast<double>(w.size())));

        auto os = detail::open_report(cfg, "weights.csv");
        os << "asset,weight\n";
        for (Eigen::Index i = 0; i < w.size(); ++i)
            os << names[static_cast<std::size_t>(i)] << ',' << num(w(i)) << '\n';
        auto sm = detail::open_report(cfg, "worstcase_summary.csv");
        sm << "key,value\n";
        for (const auto& [k, v] : summary)
            sm << k << ',' << v << '\n';
    }

    /// Model (adjacency-constrained) and sample matrices side by side.
    inline void cmd_precision(const RunConfig& cfg)
    {
        if (cfg.input.empty())
            throw Error(Errc::invalid_argument, "precision needs --input");
        const auto panel = detail::load_returns(cfg, cfg.period.value_or(Period::daily));
        const auto& names = panel.assets;
        std::optional<AdjacencyMatrix> adj;
        if (!cfg.adjacency.empty())
        {
            std::ifstream in(cfg.adjacency);
            if (!in)
                throw Error(Errc::io_error, "cannot open '" + cfg.adjacency + "'");
            adj = read_adjacency_csv(in, names);
        }
        else if (!cfg.sector_map.empty())
        {
            std::ifstream in(cfg.sector_map);
            if (!in)
                throw Error(Errc::io_error, "cannot open '" + cfg.sector_map + "'");
            adj = read_sector_map(in, names);
        }
        else
            adj = AdjacencyMatrix::full(static_cast<Eigen::Index>(names.size()));

        const Eigen::MatrixXd x = panel.aligned();
        const auto model = estimate_precision(x, *adj);
        const Eigen::MatrixXd sigma_model = covariance_from_precision(model);
        const Eigen::MatrixXd pcorr_model = partial_correlation(model.theta);
        const Eigen::MatrixXd corr_model = separate(sigma_model).corr;

        const Eigen::MatrixXd sigma_sample = sample_covariance(x);
        const Eigen::MatrixXd corr_sample = separate(sigma_sample).corr;
        std::optional<Eigen::MatrixXd> theta_sample;
        std::string sample_status = "ok";
        try
        {
            theta_sample = numeric::spd_inverse(sigma_sample, Errc::singular_covariance);
        }
        catch (const Error& e)
        {
            sample_status = to_string(e.code());
        }

        bool zeros_ok = true;
        for (Eigen::Index i = 0; i < model.theta.rows(); ++i)
            for (Eigen::Index j = 0; j < model.theta.cols(); ++j)
                if (!adj->linked(i, j) && (model.theta(i, j) != 0.0 || pcorr_model(i, j) != 0.0))
                    zeros_ok = false;

        auto write = [&](const std::string& file, const Eigen::MatrixXd& m,
                         const std::optional<Eigen::MatrixXd>& sample) {
            auto os = detail::open_report(cfg, file);
            detail::write_matrix_header(os, names);
            detail::write_matrix_rows(os, "model", m, names);
            if (sample)
                detail::write_matrix_rows(os, "sample", *sample, names);
            else
                os << "# sample: " << sample_status << '\n';
        };
        write("theta.csv", model.theta, theta_sample);
        write("sigma.csv", sigma_model, sigma_sample);
        write("corr.csv", corr_model, corr_sample);
        write("pcorr.csv", pcorr_model,
              theta_sample ? std::optional<Eigen::MatrixXd>(partial_correlation(*theta_sample)) : std::nullopt);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.theta, Eigen::EigenvaluesOnly);
        auto sm = detail::open_report(cfg, "precision_summary.csv");
        sm << "key,value\n"
           << "observations," << x.rows() << '\n'
           << "assets," << x.cols() << '\n'
           << "shrinkage," << num(model.shrinkage) << '\n'
           << "psd_shift," << num(model.psd_shift) << '\n'
           << "theta_min_eigenvalue," << num(es.eigenvalues().minCoeff()) << '\n'
           << "zero_pattern_ok," << (zeros_ok ? 1 : 0) << '\n'
           << "sample_inversion," << sample_status << '\n';
    }

    /// Ranked long-horizon objectives per asset.
    inline void cmd_longterm(const RunConfig& cfg)
    {
        const std::size_t n = cfg.mu_d.size();
        if (n == 0 || cfg.sigma_d.size() != n || cfg.vol.size() != n)
            throw Error(Errc::invalid_argument, "--mu-d, --sigma-d and --vol need one entry per asset");
        const CrraGamma g(cfg.gamma);
        const auto names = detail::asset_names(cfg, n);
        struct Row
        {
            std::string name;
            LogNormalParams ln;
            MeanMedian mm;
            LongTermObjective obj;
        };
        std::vector<Row> rows;
        for (std::size_t i = 0; i < n; ++i)
        {
            const GbmDriftModel m(cfg.mu_d[i], cfg.sigma_d[i], cfg.vol[i], cfg.horizon);
            rows.push_back({names[i], gbm_terminal_distribution(m), gbm_mean_median(m), longterm_objective(m, g)});
        }
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i)
            order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return rows[x].obj.value > rows[y].obj.value; });
        auto os = detail::open_report(cfg, "longterm.csv");
        os << "asset,mu_m,sigma_m,mean,median,objective,tag,rank\n";
        for (std::size_t r = 0; r < n; ++r)
        {
            const auto& row = rows[order[r]];
            os << row.name << ',' << num(row.ln.mu) << ',' << num(row.ln.sigma) << ',' << num(row.mm.mean) << ','
               << num(row.mm.median) << ',' << num(row.obj.value) << ',' << row.obj.tag << ',' << (r + 1) << '\n';
        }
    }

    enum ExitCode : int
    {
        exit_ok = 0,
        exit_input = 2,
        exit_numeric = 3
    };

    inline int exit_code_for(Errc code) { return is_input_error(code) ? exit_input : exit_numeric; }

    inline void dispatch(const RunConfig& cfg)
    {
        if (cfg.command == "fit")
            cmd_fit(cfg);
        else if (cfg.command == "allocate")
            cmd_allocate(cfg);
        else if (cfg.command == "worstcase")
            cmd_worstcase(cfg);
        else if (cfg.command == "precision")
            cmd_precision(cfg);
        else if (cfg.command == "longterm")
            cmd_longterm(cfg);
        else
            throw Error(Errc::invalid_argument, "unknown command '" + cfg.command + "'");
    }

} // namespace portrules::cli
