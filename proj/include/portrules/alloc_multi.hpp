/**
 * @file alloc_multi.hpp
 * @brief Multi-asset CARA allocation for Gaussian and multivariate ALD returns.
 *
 * The ALD objectives have the common form
 *
 *     f(w) = l^T w - a/2 w^T S0 w + 1/a log D(w),
 *     D(w) = 1 - a^2/2 w^T Sigma w + a mu_a^T w  (> 0),
 *
 * with l = mu and S0 = 0 for the plain model, and l = mu0, S0 = diag(sigma0^2)
 * when the location is marginalized over a Gaussian prior. On the ellipsoid
 * D > 0 the objective is strictly concave and diverges to -inf at the
 * boundary, so a damped Newton iteration on grad f = 0 converges to the
 * unique interior maximizer. The governing stationarity system reported as a
 * residual is
 *
 *     (l - a S0 w) D(w) + (mu_a - a Sigma w) = 0.
 */

#pragma once

#include "portrules/error.hpp"
#include "portrules/numeric.hpp"
#include "portrules/utility.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>

namespace portrules
{

    struct MultiGaussian
    {
        Eigen::VectorXd mu;
        Eigen::MatrixXd sigma;

        MultiGaussian(Eigen::VectorXd mu_, Eigen::MatrixXd sigma_) : mu(std::move(mu_)), sigma(std::move(sigma_))
        {
            if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size() || mu.size() == 0)
                throw Error(Errc::invalid_argument, "mean and covariance sizes disagree");
        }
    };

    /// Location mu, scale matrix Sigma and per-asset skewness kappa. The
    /// asymmetry vector is mu_a_i = sqrt(Sigma_ii / 2) (1/kappa_i - kappa_i).
    struct MultiAld
    {
        Eigen::VectorXd mu;
        Eigen::MatrixXd sigma;
        Eigen::VectorXd kappa;
        Eigen::VectorXd mu_a;

        MultiAld(Eigen::VectorXd mu_, Eigen::MatrixXd sigma_, Eigen::VectorXd kappa_)
            : mu(std::move(mu_)), sigma(std::move(sigma_)), kappa(std::move(kappa_))
        {
            const auto n = mu.size();
            if (n == 0 || sigma.rows() != n || sigma.cols() != n || kappa.size() != n)
                throw Error(Errc::invalid_argument, "location, scale and kappa sizes disagree");
            if ((kappa.array() <= 0.0).any() || !kappa.allFinite())
                throw Error(Errc::invalid_argument, "kappa must be positive");
            if ((sigma.diagonal().array() <= 0.0).any())
                throw Error(Errc::singular_covariance, "scale matrix needs a positive diagonal");
            mu_a = (0.5 * sigma.diagonal().array()).sqrt() * (kappa.array().inverse() - kappa.array());
        }

        bool symmetric() const { return ((kappa.array() - 1.0).abs() <= 1e-12).all(); }
    };

    /// Gaussian prior on the location vector with independent components.
    struct MultiPrior
    {
        Eigen::VectorXd mu0;
        Eigen::VectorXd var0; ///< diagonal of Sigma0

        MultiPrior(Eigen::VectorXd mu0_, Eigen::VectorXd var0_) : mu0(std::move(mu0_)), var0(std::move(var0_))
        {
            if (mu0.size() != var0.size())
                throw Error(Errc::invalid_argument, "prior mean and variance sizes disagree");
            if ((var0.array() < 0.0).any() || !var0.allFinite())
                throw Error(Errc::invalid_argument, "prior variances must be non-negative");
        }

        Eigen::MatrixXd sigma0() const { return var0.asDiagonal(); }
    };

    struct WeightVector
    {
        Eigen::VectorXd w;
        bool feasible = true;
        double margin = 1.0;      ///< D(w) for ALD results, 1 otherwise
        double objective = 0.0;
        double residual = 0.0;    ///< stationarity residual scaled by 1/(|l|+1)
        int iterations = 0;
        int restarts = 0;
        bool zero_location = false;
        double d = 0.0;           ///< w^T Sigma w on the symmetric paths
    };

    namespace detail
    {
        struct AldProblem
        {
            const Eigen::VectorXd& linear;  ///< mu or mu0
            const Eigen::MatrixXd& sigma;
            const Eigen::VectorXd& mu_a;
            const Eigen::VectorXd* var0;    ///< nullptr for the plain model
            double a;

            double domain(const Eigen::VectorXd& w) const
            {
                return 1.0 - 0.5 * a * a * w.dot(sigma * w) + a * mu_a.dot(w);
            }

            double objective(const Eigen::VectorXd& w) const
            {
                const double d = domain(w);
                if (!(d > 0.0))
                    return -std::numeric_limits<double>::infinity();
                double f = linear.dot(w) + std::log(d) / a;
                if (var0)
                    f -= 0.5 * a * w.dot(var0->cwiseProduct(w));
                return f;
            }

            Eigen::VectorXd shrink_pull(const Eigen::VectorXd& w) const
            {
                Eigen::VectorXd out = linear;
                if (var0)
                    out -= a * var0->cwiseProduct(w);
                return out;
            }

            Eigen::VectorXd gradient(const Eigen::VectorXd& w) const
            {
                return shrink_pull(w) + (mu_a - a * (sigma * w)) / domain(w);
            }

            /// (l - a S0 w) D + (mu_a - a Sigma w)
            Eigen::VectorXd system(const Eigen::VectorXd& w) const
            {
                return shrink_pull(w) * domain(w) + (mu_a - a * (sigma * w));
            }

            double scaled_residual(const Eigen::VectorXd& w) const
            {
                return system(w).norm() / (linear.norm() + 1.0);
            }

            /// Negative Hessian: a S0 + (a/D) Sigma + (a/D^2) g g^T, SPD inside the domain.
            Eigen::MatrixXd neg_hessian(const Eigen::VectorXd& w) const
            {
                const double d = domain(w);
                const Eigen::VectorXd g = mu_a - a * (sigma * w);
                Eigen::MatrixXd h = (a / d) * sigma + (a / (d * d)) * (g * g.transpose());
                if (var0)
                    h.diagonal() += a * (*var0);
                return h;
            }

            /// Pull w toward the origin until it is strictly inside the domain.
            Eigen::VectorXd make_feasible(Eigen::VectorXd w) const
            {
                for (int i = 0; i < 200 && !(domain(w) > 1e-8); ++i)
                    w *= 0.5;
                if (!(domain(w) > 0.0))
                    w.setZero();
                return w;
            }
        };

        struct NewtonOutcome
        {
            Eigen::VectorXd w;
            int iterations = 0;
            bool converged = false;
        };

        /// Damped Newton: step halving (at most 50) until the step stays in the
        /// domain and does not decrease the objective.
        inline NewtonOutcome damped_newton(const AldProblem& prob, Eigen::VectorXd w, int max_iter = 200)
        {
            NewtonOutcome out;
            double f = prob.objective(w);
            for (int it = 0; it < max_iter; ++it)
            {
                out.iterations = it + 1;
                if (prob.scaled_residual(w) < 1e-13)
                {
                    out.converged = true;
                    break;
                }
                const Eigen::MatrixXd nh = prob.neg_hessian(w);
                Eigen::LLT<Eigen::MatrixXd> llt(nh);
                if (llt.info() != Eigen::Success)
                    break;
                const Eigen::VectorXd step = llt.solve(prob.gradient(w));
                double t = 1.0;
                bool accepted = false;
                for (int h = 0; h <= 50; ++h, t *= 0.5)
                {
                    const Eigen::VectorXd cand = w + t * step;
                    const double fc = prob.objective(cand);
                    if (std::isfinite(fc) && fc >= f - 1e-15 * (1.0 + std::abs(f)))
                    {
                        w = cand;
                        f = fc;
                        accepted = true;
                        break;
                    }
                }
                if (!accepted)
                    break;
                if (t * step.norm() <= 1e-16 * (1.0 + w.norm()))
                {
                    out.converged = prob.scaled_residual(w) < 1e-10;
                    break;
                }
            }
            if (!out.converged)
                out.converged = prob.scaled_residual(w) < 1e-10;
            out.w = std::move(w);
            return out;
        }

        /// Newton from `start`, then up to eight seeded random restarts drawn
        /// inside the feasible ellipsoid.
        inline WeightVector solve_ald_system(const AldProblem& prob, const Eigen::VectorXd& start)
        {
            auto finish = [&](const NewtonOutcome& o, int restarts) {
                WeightVector res;
                res.w = o.w;
                res.margin = prob.domain(o.w);
                res.feasible = res.margin > 0.0;
                if (!res.feasible)
                    throw Error(Errc::infeasible_root, "Newton root left the ALD domain");
                res.objective = prob.objective(o.w);
                res.residual = prob.scaled_residual(o.w);
                res.iterations = o.iterations;
                res.restarts = restarts;
                res.d = o.w.dot(prob.sigma * o.w);
                return res;
            };

            auto first = damped_newton(prob, prob.make_feasible(start));
            if (first.converged)
                return finish(first, 0);

            std::mt19937_64 rng(0x5eed5eedULL);
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const auto n = start.size();
            for (int r = 1; r <= 8; ++r)
            {
                Eigen::VectorXd u(n);
                for (Eigen::Index i = 0; i < n; ++i)
                    u(i) = gauss(rng);
                // D(t u) = 1 + a t mu_a.u - a^2 t^2 u.Sigma.u / 2; positive for t below the root.
                const double qa = 0.5 * prob.a * prob.a * u.dot(prob.sigma * u);
                const double qb = prob.a * prob.mu_a.dot(u);
                const double t_max = (qb + std::sqrt(qb * qb + 4.0 * qa)) / (2.0 * qa);
                auto o = damped_newton(prob, (unif(rng) * t_max * 0.99) * u);
                if (o.converged)
                    return finish(o, r);
            }
            throw Error(Errc::non_convergence, "damped Newton failed after 8 restarts");
        }
    } // namespace detail

    /// Markowitz weights (1/a) Sigma^-1 mu by Cholesky solve.
    inline WeightVector gaussian_weights(const MultiGaussian& m, const RiskAversion& a)
    {
        WeightVector res;
        res.w = numeric::spd_solve(m.sigma, m.mu) / a.value();
        res.objective = m.mu.dot(res.w) - 0.5 * a.value() * res.w.dot(m.sigma * res.w);
        res.residual = (a.value() * (m.sigma * res.w) - m.mu).norm() / (m.mu.norm() + 1.0);
        return res;
    }

    /// (1/a) (Sigma + Sigma0)^-1 mu0: the prior variance acts as a ridge.
    inline WeightVector gaussian_weights_marginal(const MultiGaussian& m, const MultiPrior& prior,
                                                  const RiskAversion& a)
    {
        if (prior.mu0.size() != m.mu.size())
            throw Error(Errc::invalid_argument, "prior size disagrees with covariance");
        Eigen::MatrixXd total = m.sigma;
        total.diagonal() += prior.var0;
        WeightVector res;
        res.w = numeric::spd_solve(total, prior.mu0) / a.value();
        res.objective = prior.mu0.dot(res.w) - 0.5 * a.value() * res.w.dot(total * res.w);
        res.residual = (a.value() * (total * res.w) - prior.mu0).norm() / (prior.mu0.norm() + 1.0);
        return res;
    }

    /// c(q) = (sqrt(1 + 2q) - 1) / q, written as 2 / (sqrt(1 + 2q) + 1).
    inline double symmetric_multiplier(double q) { return 2.0 / (std::sqrt(1.0 + 2.0 * q) + 1.0); }

    /**
     * Symmetric ALD (all kappa = 1): w = c/a Sigma^-1 mu with
     * q = mu^T Sigma^-1 mu. The positive multiplier c is the root of
     * q c^2 + 2c - 2 = 0 that gives a maximum; mu = 0 returns w = 0 flagged
     * as zero_location.
     */
    inline WeightVector ald_weights_symmetric(const MultiAld& m, const RiskAversion& a)
    {
        if (!m.symmetric())
            throw Error(Errc::invalid_argument, "symmetric closed form needs kappa = 1 for every asset");
        const double av = a.value();
        WeightVector res;
        const Eigen::VectorXd x = numeric::spd_solve(m.sigma, m.mu);
        const double q = m.mu.dot(x);
        if (q <= 0.0)
        {
            res.w = Eigen::VectorXd::Zero(m.mu.size());
            res.zero_location = true;
        }
        else
        {
            res.w = (symmetric_multiplier(q) / av) * x;
        }
        const detail::AldProblem prob{m.mu, m.sigma, m.mu_a, nullptr, av};
        res.margin = prob.domain(res.w);
        res.feasible = res.margin > 0.0;
        res.objective = prob.objective(res.w);
        res.residual = prob.scaled_residual(res.w);
        res.d = res.w.dot(m.sigma * res.w);
        return res;
    }

    /// General multivariate ALD weights, Newton from the symmetric closed form.
    inline WeightVector ald_weights(const MultiAld& m, const RiskAversion& a)
    {
        const double av = a.value();
        // Fails with SingularCovariance on a non-SPD scale matrix.
        const Eigen::VectorXd x = numeric::spd_solve(m.sigma, m.mu);
        const double q = m.mu.dot(x);
        const Eigen::VectorXd start = q > 0.0 ? Eigen::VectorXd((symmetric_multiplier(q) / av) * x)
                                              : Eigen::VectorXd::Zero(m.mu.size());
        const detail::AldProblem prob{m.mu, m.sigma, m.mu_a, nullptr, av};
        return detail::solve_ald_system(prob, start);
    }

    /// Marginalized multivariate ALD weights, Newton from the marginal Gaussian solution.
    inline WeightVector ald_weights_marginal(const MultiAld& m, const MultiPrior& prior, const RiskAversion& a)
    {
        if (prior.mu0.size() != m.mu.size())
            throw Error(Errc::invalid_argument, "prior size disagrees with scale matrix");
        numeric::spd_factor(m.sigma, Errc::singular_covariance, "scale matrix is not positive definite");
        const double av = a.value();
        const MultiGaussian g(prior.mu0, m.sigma);
        const Eigen::VectorXd start = gaussian_weights_marginal(g, prior, a).w;
        const detail::AldProblem prob{prior.mu0, m.sigma, m.mu_a, &prior.var0, av};
        return detail::solve_ald_system(prob, start);
    }

    /**
     * Symmetric (mu_a = 0) marginalized weights through the scalar d = w^T Sigma w.
     * With t = 1 - a^2 d / 2 the stationarity condition reads
     * w(t) = t (a (Sigma + t Sigma0))^-1 mu0, and t in (0, 1] solves
     * w(t)^T Sigma w(t) = 2 (1 - t) / a^2 by bisection.
     */
    inline WeightVector ald_weights_marginal_symmetric(const MultiAld& m, const MultiPrior& prior,
                                                       const RiskAversion& a)
    {
        if (!m.symmetric())
            throw Error(Errc::invalid_argument, "scalar-d path needs kappa = 1 for every asset");
        if (prior.mu0.size() != m.mu.size())
            throw Error(Errc::invalid_argument, "prior size disagrees with scale matrix");
        const double av = a.value();
        auto weights_at = [&](double t) {
            Eigen::MatrixXd mat = m.sigma;
            mat.diagonal() += t * prior.var0;
            return Eigen::VectorXd(t / av * numeric::spd_solve(mat, prior.mu0));
        };
        auto h = [&](double t) {
            const Eigen::VectorXd w = weights_at(t);
            return w.dot(m.sigma * w) - 2.0 * (1.0 - t) / (av * av);
        };
        double t = 1.0;
        if (h(1.0) > 0.0)
            t = numeric::bisect(h, 1e-300, 1.0, 1e-16, 400);
        WeightVector res;
        res.w = weights_at(t);
        res.zero_location = prior.mu0.isZero(0.0);
        const detail::AldProblem prob{prior.mu0, m.sigma, m.mu_a, &prior.var0, av};
        res.margin = prob.domain(res.w);
        res.feasible = res.margin > 0.0;
        res.objective = prob.objective(res.w);
        res.residual = prob.scaled_residual(res.w);
        res.d = res.w.dot(m.sigma * res.w);
        return res;
    }

    /// Multivariate ALD objective, marginalized when prior is given. -inf
    /// outside the domain.
    inline double multi_ald_objective(const Eigen::VectorXd& w, const MultiAld& m, const RiskAversion& a,
                                      const MultiPrior* prior = nullptr)
    {
        const detail::AldProblem prob{prior ? prior->mu0 : m.mu, m.sigma, m.mu_a, prior ? &prior->var0 : nullptr,
                                      a.value()};
        return prob.objective(w);
    }

} // namespace portrules
