/**
 * @file ald.hpp
 * @brief Univariate asymmetric Laplace distribution (ALD).
 *
 * Parametrization with location mu, scale sigma > 0 and skewness kappa > 0:
 *
 *     p(x) = sqrt(2)/sigma * kappa/(1+kappa^2) * exp(-sqrt(2) (x-mu)/sigma * s * kappa^s),
 *     s = sign(x - mu)
 *
 * kappa > 1 skews toward negative returns. The asymmetry shift is
 * mu_a = sigma/sqrt(2) * (1/kappa - kappa), giving mean mu + mu_a and
 * variance sigma^2 + mu_a^2.
 *
 * Estimation is by profile maximum likelihood or by a random-walk Metropolis
 * sampler; both reuse the sorted sample with prefix sums so that the
 * likelihood at any (mu, sigma, kappa) costs O(log n).
 */

#pragma once

#include "portrules/error.hpp"
#include "portrules/numeric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace portrules
{

    struct AldParams
    {
        double mu = 0.0;
        double sigma = 1.0;
        double kappa = 1.0;

        AldParams() = default;
        AldParams(double mu_, double sigma_, double kappa_) : mu(mu_), sigma(sigma_), kappa(kappa_)
        {
            if (!std::isfinite(mu) || !std::isfinite(sigma) || !std::isfinite(kappa) || sigma <= 0.0 ||
                kappa <= 0.0)
                throw Error(Errc::invalid_argument, "ALD requires finite mu, sigma > 0, kappa > 0");
        }

        double mu_a() const { return sigma / std::numbers::sqrt2 * (1.0 / kappa - kappa); }
    };

    struct AldMoments
    {
        double mean = 0.0;
        double variance = 0.0;
    };

    inline double ald_log_pdf(double x, const AldParams& p)
    {
        const double d = x - p.mu;
        const double rate = d >= 0.0 ? p.kappa : 1.0 / p.kappa;
        return std::log(std::numbers::sqrt2 / p.sigma * p.kappa / (1.0 + p.kappa * p.kappa)) -
               std::numbers::sqrt2 * std::abs(d) * rate / p.sigma;
    }

    inline double ald_pdf(double x, const AldParams& p) { return std::exp(ald_log_pdf(x, p)); }

    inline AldMoments ald_mean_var(const AldParams& p)
    {
        const double ma = p.mu_a();
        return {p.mu + ma, p.sigma * p.sigma + ma * ma};
    }

    /// i.i.d. draws as mu + sigma/sqrt(2) * (E1/kappa - kappa*E2) with E1, E2
    /// standard exponentials. Deterministic for a given seed.
    inline std::vector<double> sample_ald(const AldParams& p, std::size_t n, std::uint64_t seed)
    {
        if (n == 0)
            throw Error(Errc::invalid_argument, "sample size must be at least 1");
        std::mt19937_64 rng(seed);
        std::exponential_distribution<double> expo(1.0);
        const double scale = p.sigma / std::numbers::sqrt2;
        std::vector<double> out(n);
        for (auto& v : out)
        {
            const double e1 = expo(rng);
            const double e2 = expo(rng);
            v = p.mu + scale * (e1 / p.kappa - p.kappa * e2);
        }
        return out;
    }

    namespace detail
    {
        /// Sorted sample with prefix sums. Gives the positive and negative parts
        /// sum (x - m)^+ and sum (m - x)^+ at any m in O(log n).
        class AldSample
        {
        public:
            explicit AldSample(std::span<const double> data) : x_(data.begin(), data.end())
            {
                std::sort(x_.begin(), x_.end());
                prefix_.resize(x_.size() + 1, 0.0);
                for (std::size_t i = 0; i < x_.size(); ++i)
                    prefix_[i + 1] = prefix_[i] + x_[i];
            }

            std::size_t size() const { return x_.size(); }
            double at(std::size_t i) const { return x_[i]; }
            double front() const { return x_.front(); }
            double back() const { return x_.back(); }

            struct Parts
            {
                double above = 0.0; ///< sum (x - m)^+
                double below = 0.0; ///< sum (m - x)^+
            };

            Parts parts(double m) const
            {
                const auto k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), m) - x_.begin());
                return parts_at_split(m, k);
            }

            /// Parts at m = x_[j], without the binary search.
            Parts parts_at_index(std::size_t j) const { return parts_at_split(x_[j], j); }

            /// Log-likelihood of the whole sample under (mu, sigma, kappa).
            double log_likelihood(double mu, double sigma, double kappa) const
            {
                const Parts pr = parts(mu);
                return log_likelihood(pr, sigma, kappa);
            }

            double log_likelihood(const Parts& pr, double sigma, double kappa) const
            {
                const double n = static_cast<double>(x_.size());
                return n * std::log(std::numbers::sqrt2 / sigma * kappa / (1.0 + kappa * kappa)) -
                       std::numbers::sqrt2 / sigma * (kappa * pr.above + pr.below / kappa);
            }

        private:
            Parts parts_at_split(double m, std::size_t k) const
            {
                // x_[0..k) <= m < x_[k..n)
                const double n = static_cast<double>(x_.size());
                const double kd = static_cast<double>(k);
                Parts pr;
                pr.below = kd * m - prefix_[k];
                pr.above = (prefix_.back() - prefix_[k]) - (n - kd) * m;
                pr.below = std::max(pr.below, 0.0);
                pr.above = std::max(pr.above, 0.0);
                return pr;
            }

            std::vector<double> x_;
            std::vector<double> prefix_;
        };

        inline void check_fit_input(std::span<const double> data)
        {
            if (data.size() < 30)
                throw Error(Errc::insufficient_data, "ALD fit needs at least 30 observations");
            for (double v : data)
                if (!std::isfinite(v))
                    throw Error(Errc::invalid_argument, "ALD fit input contains non-finite values");
            const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
            if (*lo == *hi)
                throw Error(Errc::degenerate_data, "constant sample");
        }

        struct ProfilePoint
        {
            double mu = 0.0;
            double sigma = 0.0;
            double loglik = 0.0;
        };

        /// Profile over (mu, sigma) at fixed kappa. The objective in mu is
        /// piecewise linear with kinks at the data points, so the minimizer of
        /// kappa*sum(x-mu)^+ + sum(mu-x)^+/kappa is found by scanning them;
        /// sigma then has the closed form sqrt(2)/n times that minimum.
        inline ProfilePoint profile_at_kappa(const AldSample& s, double kappa)
        {
            double best_q = std::numeric_limits<double>::infinity();
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < s.size(); ++j)
            {
                const auto pr = s.parts_at_index(j);
                const double q = kappa * pr.above + pr.below / kappa;
                if (q < best_q)
                {
                    best_q = q;
                    best_j = j;
                }
            }
            const double n = static_cast<double>(s.size());
            ProfilePoint pt;
            pt.mu = s.at(best_j);
            pt.sigma = std::numbers::sqrt2 * best_q / n;
            pt.loglik = n * std::log(std::numbers::sqrt2 * kappa / (1.0 + kappa * kappa)) - n * std::log(pt.sigma) - n;
            return pt;
        }
    } // namespace detail

    struct AldFit
    {
        AldParams params;
        double loglik = 0.0;
        std::size_t n = 0;
    };

    inline constexpr double kKappaSearchLo = 0.5;
    inline constexpr double kKappaSearchHi = 2.0;

    /**
     * Maximum-likelihood fit.
     *
     * kappa is searched on [0.5, 2.0]: a log-spaced scan of 61 points locates
     * the bracket, then golden-section refines it to 1e-10. At each kappa the
     * location and scale are profiled out exactly (see profile_at_kappa).
     */
    inline AldFit fit_ald_mle(std::span<const double> data)
    {
        detail::check_fit_input(data);
        const detail::AldSample sample(data);

        auto profile_ll = [&](double kappa) { return detail::profile_at_kappa(sample, kappa).loglik; };

        constexpr int grid = 61;
        const double log_lo = std::log(kKappaSearchLo), log_hi = std::log(kKappaSearchHi);
        int best = 0;
        double best_ll = -std::numeric_limits<double>::infinity();
        std::array<double, grid> kappas{};
        for (int i = 0; i < grid; ++i)
        {
            kappas[i] = std::exp(log_lo + (log_hi - log_lo) * i / (grid - 1));
            const double ll = profile_ll(kappas[i]);
            if (ll > best_ll)
            {
                best_ll = ll;
                best = i;
            }
        }
        const double lo = kappas[std::max(best - 1, 0)];
        const double hi = kappas[std::min(best + 1, grid - 1)];
        double kappa = numeric::golden_section_max(profile_ll, lo, hi, 1e-10);
        if (profile_ll(kappa) < best_ll)
            kappa = kappas[best];

        const auto pt = detail::profile_at_kappa(sample, kappa);
        if (!(pt.sigma > 0.0))
            throw Error(Errc::degenerate_data, "zero fitted scale");
        return {AldParams(pt.mu, pt.sigma, kappa), pt.loglik, sample.size()};
    }

    struct MetropolisFit
    {
        AldParams posterior_mean;
        double sd_mu = 0.0;
        double sd_sigma = 0.0;
        double sd_kappa = 0.0;
        std::array<double, 3> acceptance{}; ///< post burn-in rates for mu, log sigma, log kappa
        std::size_t iterations = 0;
    };

    /**
     * Random-walk Metropolis over (mu, log sigma, log kappa) with flat priors
     * in those coordinates. Each iteration updates the three coordinates in
     * turn with Gaussian proposals. During the burn-in (first iters/2) the step
     * sizes are tuned every 50 iterations toward 30% acceptance; posterior
     * means and standard deviations come from the second half.
     *
     * Throws NonConvergence when any post burn-in acceptance rate falls
     * outside [0.05, 0.7].
     */
    inline MetropolisFit fit_ald_metropolis(std::span<const double> data, std::size_t iters, std::uint64_t seed)
    {
        detail::check_fit_input(data);
        if (iters < 10000)
            throw Error(Errc::invalid_argument, "Metropolis needs at least 10000 iterations");
        const detail::AldSample sample(data);
        const AldFit start = fit_ald_mle(data);

        std::array<double, 3> state{start.params.mu, std::log(start.params.sigma), std::log(start.params.kappa)};
        const double n = static_cast<double>(sample.size());
        std::array<double, 3> step{start.params.sigma / std::sqrt(n), 1.0 / std::sqrt(n), 1.0 / std::sqrt(n)};

        auto parts = sample.parts(state[0]);
        auto loglik = [&](const detail::AldSample::Parts& pr, const std::array<double, 3>& s) {
            return sample.log_likelihood(pr, std::exp(s[1]), std::exp(s[2]));
        };
        double current = loglik(parts, state);

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        const std::size_t burn_in = iters / 2;
        constexpr std::size_t batch = 50;
        std::array<std::size_t, 3> batch_accept{};
        std::array<std::size_t, 3> kept_accept{};

        // Welford accumulators for mu, sigma, kappa.
        std::array<double, 3> mean{}, m2{};
        std::size_t kept = 0;

        for (std::size_t it = 0; it < iters; ++it)
        {
            for (std::size_t c = 0; c < 3; ++c)
            {
                auto proposal = state;
                proposal[c] += step[c] * gauss(rng);
                const auto prop_parts = (c == 0) ? sample.parts(proposal[0]) : parts;
                const double prop_ll = loglik(prop_parts, proposal);
                const double log_ratio = prop_ll - current;
                if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio)
                {
                    state = proposal;
                    parts = prop_parts;
                    current = prop_ll;
                    if (it < burn_in)
                        ++batch_accept[c];
                    else
                        ++kept_accept[c];
                }
            }
            if (it < burn_in && (it + 1) % batch == 0)
            {
                for (std::size_t c = 0; c < 3; ++c)
                {
                    const double rate = static_cast<double>(batch_accept[c]) / batch;
                    step[c] *= std::exp(rate - 0.3);
                    batch_accept[c] = 0;
                }
            }
            if (it >= burn_in)
            {
                ++kept;
                const std::array<double, 3> v{state[0], std::exp(state[1]), std::exp(state[2])};
                for (std::size_t c = 0; c < 3; ++c)
                {
                    const double delta = v[c] - mean[c];
                    mean[c] += delta / static_cast<double>(kept);
                    m2[c] += delta * (v[c] - mean[c]);
                }
            }
        }

        MetropolisFit fit;
        fit.iterations = iters;
        for (std::size_t c = 0; c < 3; ++c)
            fit.acceptance[c] = static_cast<double>(kept_accept[c]) / static_cast<double>(kept);
        for (double rate : fit.acceptance)
            if (rate < 0.05 || rate > 0.7)
                throw Error(Errc::non_convergence,
                            "Metropolis acceptance rate " + std::to_string(rate) + " outside [0.05, 0.7]");
        const double denom = static_cast<double>(kept > 1 ? kept - 1 : 1);
        fit.posterior_mean = AldParams(mean[0], mean[1], mean[2]);
        fit.sd_mu = std::sqrt(m2[0] / denom);
        fit.sd_sigma = std::sqrt(m2[1] / denom);
        fit.sd_kappa = std::sqrt(m2[2] / denom);
        return fit;
    }

    struct ScalingFit
    {
        double exponent = 0.0;
        double intercept = 0.0;
        double r2 = 0.0;
    };

    /// Power law value ~ T^exponent by least squares on the log-log scale.
    inline ScalingFit fit_scaling_law(std::span<const double> horizons, std::span<const double> values)
    {
        if (horizons.size() != values.size())
            throw Error(Errc::invalid_argument, "horizons and values differ in length");
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < horizons.size(); ++i)
        {
            if (!(horizons[i] > 0.0) || !(values[i] > 0.0))
                throw Error(Errc::degenerate_regression, "scaling law needs positive horizons and values");
            lx.push_back(std::log(horizons[i]));
            ly.push_back(std::log(values[i]));
        }
        const auto fit = numeric::ordinary_least_squares(lx, ly);
        return {fit.slope, fit.intercept, fit.r2};
    }

    struct KappaRelation
    {
        double a = 0.0; ///< slope of mu/sigma against kappa - 1
        double b = 0.0; ///< intercept
        double r2 = 0.0;
    };

    /// Linear relation mu/sigma = a*(kappa - 1) + b across fitted assets.
    inline KappaRelation fit_kappa_relation(std::span<const AldParams> params)
    {
        std::vector<double> x, y;
        for (const auto& p : params)
        {
            x.push_back(p.kappa - 1.0);
            y.push_back(p.mu / p.sigma);
        }
        const auto fit = numeric::ordinary_least_squares(x, y);
        return {fit.slope, fit.intercept, fit.r2};
    }

} // namespace portrules
