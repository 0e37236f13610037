/**
 * @file longterm.hpp
 * @brief CRRA expected utility of log-normal outcomes and the GBM model with
 * a normally distributed drift.
 */

#pragma once

#include "portrules/error.hpp"
#include "portrules/utility.hpp"

#include <cmath>
#include <string>

namespace portrules
{

    /// Log-scale location and deviation of a log-normal outcome.
    struct LogNormalParams
    {
        double mu = 0.0;
        double sigma = 1.0;

        LogNormalParams(double mu_, double sigma_) : mu(mu_), sigma(sigma_)
        {
            if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0))
                throw Error(Errc::invalid_argument, "log-normal needs finite mu and sigma > 0");
        }
    };

    /// Drift ~ N(mu_d, sigma_d^2) per unit time, volatility sigma, horizon T.
    struct GbmDriftModel
    {
        double mu_d = 0.0;
        double sigma_d = 0.0;
        double sigma = 0.0;
        double horizon = 1.0;

        GbmDriftModel(double mu_d_, double sigma_d_, double sigma_, double horizon_)
            : mu_d(mu_d_), sigma_d(sigma_d_), sigma(sigma_), horizon(horizon_)
        {
            if (!std::isfinite(mu_d) || !std::isfinite(sigma_d) || !std::isfinite(sigma) || !std::isfinite(horizon))
                throw Error(Errc::invalid_argument, "GBM parameters must be finite");
            if (!(sigma > 0.0) || !(horizon > 0.0) || sigma_d < 0.0)
                throw Error(Errc::invalid_argument, "GBM needs sigma > 0, T > 0 and sigma_d >= 0");
        }
    };

    /// E[(x^(1-g) - 1)/(1-g)] = (exp((1-g) mu + (1-g)^2 sigma^2/2) - 1)/(1-g), and mu at g = 1.
    inline double crra_expected_utility(const LogNormalParams& p, const CrraGamma& g)
    {
        const double e = 1.0 - g.value();
        if (std::abs(e) < 1e-8)
            return p.mu;
        return std::expm1(e * p.mu + 0.5 * e * e * p.sigma * p.sigma) / e;
    }

    /// mu_m = mu_d T - sigma^2 T/2, sigma_m^2 = sigma^2 T + sigma_d^2 T^2.
    inline LogNormalParams gbm_terminal_distribution(const GbmDriftModel& m)
    {
        const double t = m.horizon;
        return {m.mu_d * t - 0.5 * m.sigma * m.sigma * t,
                std::sqrt(m.sigma * m.sigma * t + m.sigma_d * m.sigma_d * t * t)};
    }

    struct MeanMedian
    {
        double mean = 0.0;
        double median = 0.0;
    };

    inline MeanMedian gbm_mean_median(const GbmDriftModel& m)
    {
        const double t = m.horizon;
        return {std::exp(m.mu_d * t + 0.5 * m.sigma_d * m.sigma_d * t * t),
                std::exp(m.mu_d * t - 0.5 * m.sigma * m.sigma * t)};
    }

    struct LongTermObjective
    {
        double value = 0.0;
        std::string tag;
    };

    /// gamma = 0: the mean; gamma = 1: the median; otherwise the CRRA
    /// expected utility of the terminal distribution.
    inline LongTermObjective longterm_objective(const GbmDriftModel& m, const CrraGamma& g)
    {
        if (g.value() == 0.0)
            return {gbm_mean_median(m).mean, "maximize_mean_favor_drift_dispersion"};
        if (std::abs(g.value() - 1.0) < 1e-8)
            return {gbm_mean_median(m).median, "maximize_median_minimize_volatility"};
        return {crra_expected_utility(gbm_terminal_distribution(m), g), "crra_expected_utility"};
    }

} // namespace portrules
