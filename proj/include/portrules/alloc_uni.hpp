/**
 * @file alloc_uni.hpp
 * @brief One risky asset against cash: CARA-optimal weights for Gaussian and
 * ALD returns, with and without a Gaussian prior on the location.
 *
 * With excess location m = mu - r0 the objectives maximized are
 *
 *     Gaussian:           m w - a/2 w^2 sigma^2
 *     ALD:                m w + 1/a log D(w)
 *     ALD, marginalized:  m0 w - a/2 w^2 sigma0^2 + 1/a log D(w)
 *
 * with D(w) = 1 - a^2 w^2 sigma^2 / 2 + a w mu_a, restricted to D(w) > 0.
 * The ALD objectives are strictly concave on that interval and tend to -inf
 * at its ends, so the interior stationary point is the unique maximizer.
 *
 * All weights are unclipped; long-only handling belongs to the caller.
 */

#pragma once

#include "portrules/ald.hpp"
#include "portrules/error.hpp"
#include "portrules/numeric.hpp"
#include "portrules/utility.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace portrules
{

    struct LocationPrior
    {
        double mu0 = 0.0;
        double sigma0 = 0.0;

        LocationPrior() = default;
        LocationPrior(double mu0_, double sigma0_) : mu0(mu0_), sigma0(sigma0_)
        {
            if (!std::isfinite(mu0) || !std::isfinite(sigma0) || sigma0 < 0.0)
                throw Error(Errc::invalid_argument, "prior needs finite mu0 and sigma0 >= 0");
        }
    };

    enum class UniBranch
    {
        closed_form,
        cardano,
        asymptotic
    };

    inline const char* to_string(UniBranch b)
    {
        switch (b)
        {
        case UniBranch::closed_form: return "closed_form";
        case UniBranch::cardano: return "cardano";
        case UniBranch::asymptotic: return "asymptotic";
        }
        return "?";
    }

    struct UniAllocation
    {
        double w = 0.0;
        double objective = 0.0;
        UniBranch branch = UniBranch::closed_form;
    };

    enum class AsymptoticRegime
    {
        small_ratio, ///< mu/sigma -> 0
        large_ratio  ///< mu/sigma -> infinity
    };

    /// 1 - a^2 w^2 sigma^2 / 2 + a w mu_a; positive inside the ALD domain.
    inline double ald_domain_value(double w, double sigma, double mu_a, double a)
    {
        return 1.0 - 0.5 * a * a * w * w * sigma * sigma + a * w * mu_a;
    }

    inline double markowitz_objective(double w, double excess, double sigma, double a)
    {
        return w * excess - 0.5 * a * w * w * sigma * sigma;
    }

    /// m w - a/2 w^2 sigma0^2 + 1/a log D(w); -inf outside the domain.
    inline double ald_objective(double w, double excess, double sigma, double mu_a, double a,
                                double sigma0 = 0.0)
    {
        const double d = ald_domain_value(w, sigma, mu_a, a);
        if (!(d > 0.0))
            return -std::numeric_limits<double>::infinity();
        return w * excess - 0.5 * a * w * w * sigma0 * sigma0 + std::log(d) / a;
    }

    inline UniAllocation markowitz_weight(double mu, double sigma, double r0, const RiskAversion& a)
    {
        detail::require(sigma > 0.0, "sigma must be positive");
        const double w = (mu - r0) / (a.value() * sigma * sigma);
        return {w, markowitz_objective(w, mu - r0, sigma, a.value()), UniBranch::closed_form};
    }

    inline UniAllocation markowitz_weight_marginal(const LocationPrior& prior, double sigma, double r0,
                                                   const RiskAversion& a)
    {
        detail::require(sigma > 0.0, "sigma must be positive");
        const double var = sigma * sigma + prior.sigma0 * prior.sigma0;
        const double w = (prior.mu0 - r0) / (a.value() * var);
        return {w, markowitz_objective(w, prior.mu0 - r0, std::sqrt(var), a.value()), UniBranch::closed_form};
    }

    /**
     * Closed-form ALD weight
     *
     *     w = (sqrt(2 (k^2+1)^2 m^2 + 4 k^2 s^2) - sqrt(2) (k^2-1) m - 2 k s) / (2 a k m s)
     *
     * evaluated in the rationalized form
     *
     *     w = 2 (2 k m - sqrt(2) s (k^2-1)) / (a s (sqrt(R) + sqrt(2) (k^2-1) m + 2 k s))
     *
     * whose denominator stays positive, so there is no cancellation for small m.
     * At m = 0 this is exactly the limit -(k^2-1)/(sqrt(2) a s k), reported
     * with the asymptotic branch.
     */
    inline UniAllocation ald_weight(const AldParams& p, double r0, const RiskAversion& a)
    {
        const double m = p.mu - r0;
        const double k = p.kappa, s = p.sigma, av = a.value();
        const double k2m1 = k * k - 1.0;
        const double root = std::sqrt(2.0 * (k * k + 1.0) * (k * k + 1.0) * m * m + 4.0 * k * k * s * s);
        const double denom = av * s * (root + std::numbers::sqrt2 * k2m1 * m + 2.0 * k * s);
        const double w = 2.0 * (2.0 * k * m - std::numbers::sqrt2 * s * k2m1) / denom;
        const UniBranch branch = (m == 0.0) ? UniBranch::asymptotic : UniBranch::closed_form;
        return {w, ald_objective(w, m, s, p.mu_a(), av), branch};
    }

    /// Leading-order weights in the small and large mu/sigma limits (cash at 0).
    inline UniAllocation ald_weight_asymptotic(const AldParams& p, const RiskAversion& a, AsymptoticRegime regime)
    {
        const double k = p.kappa, s = p.sigma, av = a.value();
        double w = 0.0;
        if (regime == AsymptoticRegime::small_ratio)
        {
            const double skew_term = -(k * k - 1.0) / (std::numbers::sqrt2 * k);
            const double signal_term = (k * k + 1.0) * (k * k + 1.0) / (4.0 * k * k) * p.mu / s;
            w = (skew_term + signal_term) / (av * s);
        }
        else
        {
            w = std::numbers::sqrt2 / (av * s * k);
        }
        return {w, ald_objective(w, p.mu, s, p.mu_a(), av), UniBranch::asymptotic};
    }

    /// The two terms of the small mu/sigma expansion (before the 1/(a sigma)
    /// factor): skewness term and Markowitz-like signal term.
    struct SmallRatioTerms
    {
        double skew = 0.0;
        double signal = 0.0;
    };

    inline SmallRatioTerms small_ratio_terms(const AldParams& p)
    {
        const double k = p.kappa;
        return {-(k * k - 1.0) / (std::numbers::sqrt2 * k),
                (k * k + 1.0) * (k * k + 1.0) / (4.0 * k * k) * p.mu / p.sigma};
    }

    /// Smallest location admitting a positive weight: sqrt(2) (kappa - 1) sigma.
    inline double long_only_threshold(const AldParams& p)
    {
        return std::numbers::sqrt2 * (p.kappa - 1.0) * p.sigma;
    }

    /**
     * ALD weight with the location marginalized over N(mu0, sigma0^2).
     *
     * Stationarity multiplied through by 2 kappa D(w) gives the cubic
     *
     *     a^3 k s^2 s0^2 w^3
     *   + a^2 (sqrt(2)(k^2-1) s s0^2 - k m0 s^2) w^2
     *   - a (sqrt(2)(k^2-1) m0 s + 2 k (s^2 + s0^2)) w
     *   - sqrt(2)(k^2-1) s + 2 k m0 = 0
     *
     * solved by Cardano. The root inside the domain with negative second
     * derivative of the objective is returned. p.mu is ignored.
     */
    inline UniAllocation ald_weight_marginal(const LocationPrior& prior, const AldParams& p, double r0,
                                             const RiskAversion& a)
    {
        const double k = p.kappa, s = p.sigma, s0 = prior.sigma0, av = a.value();
        const double m0 = prior.mu0 - r0;
        const double mu_a = p.mu_a();
        const double c = std::numbers::sqrt2 * (k * k - 1.0);

        const double c3 = av * av * av * k * s * s * s0 * s0;
        const double c2 = av * av * (c * s * s0 * s0 - k * m0 * s * s);
        const double c1 = -av * (c * m0 * s + 2.0 * k * (s * s + s0 * s0));
        const double c0 = -c * s + 2.0 * k * m0;

        auto gradient = [&](double w) {
            return m0 - av * s0 * s0 * w + (mu_a - av * s * s * w) / ald_domain_value(w, s, mu_a, av);
        };
        auto second = [&](double w) {
            const double d = ald_domain_value(w, s, mu_a, av);
            const double g = mu_a - av * s * s * w;
            return -av * s0 * s0 - av * s * s / d - av * g * g / (d * d);
        };

        std::optional<double> best;
        for (double w : numeric::solve_cubic(c3, c2, c1, c0))
        {
            if (!(ald_domain_value(w, s, mu_a, av) > 0.0) || !(second(w) < 0.0))
                continue;
            // Newton polish on the stationarity condition itself.
            for (int it = 0; it < 3; ++it)
            {
                const double step = gradient(w) / second(w);
                const double next = w - step;
                if (!std::isfinite(next) || !(ald_domain_value(next, s, mu_a, av) > 0.0))
                    break;
                w = next;
            }
            if (!best || ald_objective(w, m0, s, mu_a, av, s0) > ald_objective(*best, m0, s, mu_a, av, s0))
                best = w;
        }
        if (!best)
            throw Error(Errc::no_feasible_root, "no cubic root inside the ALD domain with negative curvature");
        return {*best, ald_objective(*best, m0, s, mu_a, av, s0), UniBranch::cardano};
    }

} // namespace portrules
