/**
 * @file worstcase.hpp
 * @brief Worst-case allocation on the long-only simplex.
 *
 * Gaussian forecast errors Y ~ N(0, diag(sigma0^2)) enter the objective only
 * through <Y_min> times the largest weight. The max term is handled by an
 * epigraph variable r with w_i <= r, so every KKT-producing solver returns
 * multipliers (lambda, eta, nu) for
 *
 *     grad_w q(w) - lambda 1 - eta + nu = 0,   1^T nu = dr,
 *     1^T w = 1,  0 <= w <= r,  eta, nu >= 0,  eta_i w_i = nu_i (w_i - r) = 0.
 */

#pragma once

#include "portrules/alloc_multi.hpp"
#include "portrules/error.hpp"
#include "portrules/numeric.hpp"
#include "portrules/utility.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

namespace portrules
{

    struct KktCertificate
    {
        double lambda = 0.0;
        Eigen::VectorXd eta;
        Eigen::VectorXd nu;
        std::vector<int> i0;    ///< w_i = 0
        std::vector<int> iplus; ///< 0 < w_i < r
        std::vector<int> ir;    ///< w_i = r
        double stationarity = 0.0;
        double primal = 0.0;
        double dual = 0.0;
        double slackness = 0.0;

        double residual() const { return std::max({stationarity, primal, dual, slackness}); }
    };

    struct SimplexWeights
    {
        Eigen::VectorXd w;
        double r = 0.0; ///< max_i w_i
        double objective = 0.0;
        int iterations = 0;
    };

    struct WorstCaseResult
    {
        SimplexWeights weights;
        KktCertificate kkt;
    };

    /// Weight entropy -sum w log w (0 log 0 = 0).
    inline double weight_entropy(const Eigen::VectorXd& w)
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i)
            if (w(i) > 0.0)
                s -= w(i) * std::log(w(i));
        return s;
    }

    inline double effective_count(const Eigen::VectorXd& w) { return std::exp(weight_entropy(w)); }

    /**
     * Expected minimum of independent N(mu_i, sigma_i^2) variables,
     * integral of y f_Y(y) with f_Y = sum_i f_i prod_{j != i} (1 - F_j).
     * Survival products are accumulated in log space so the integrand stays
     * finite for large N.
     */
    inline double expected_min_gaussians(const Eigen::VectorXd& sigma, const Eigen::VectorXd& mu = {})
    {
        const auto n = sigma.size();
        if (n == 0)
            throw Error(Errc::invalid_argument, "need at least one variable");
        if ((sigma.array() <= 0.0).any() || !sigma.allFinite())
            throw Error(Errc::invalid_argument, "standard deviations must be positive");
        const Eigen::VectorXd m = mu.size() == 0 ? Eigen::VectorXd::Zero(n) : mu;
        if (m.size() != n)
            throw Error(Errc::invalid_argument, "means and deviations sizes disagree");

        // Identical (mu, sigma) pairs contribute identical factors.
        std::map<std::pair<double, double>, double> groups;
        for (Eigen::Index i = 0; i < n; ++i)
            groups[{m(i), sigma(i)}] += 1.0;

        auto density = [&](double y) {
            double log_surv = 0.0;
            double hazard = 0.0;
            for (const auto& [key, count] : groups)
            {
                const double z = (y - key.first) / key.second;
                const double ls = numeric::log_normal_sf(z);
                log_surv += count * ls;
                hazard += count * std::exp(numeric::log_normal_pdf(z) - ls) / key.second;
            }
            return hazard * std::exp(log_surv);
        };

        const double lo = m.minCoeff() - 10.0 * sigma.maxCoeff();
        const double hi = m.maxCoeff() + 10.0 * sigma.maxCoeff();
        constexpr int pieces = 32;
        const double width = (hi - lo) / pieces;
        double total = 0.0;
        for (int k = 0; k < pieces; ++k)
        {
            const double a = lo + k * width;
            const double b = (k + 1 == pieces) ? hi : a + width;
            total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [&](double y) { return y * density(y); }, a, b, 12, 1e-13);
        }
        return total;
    }

    /**
     * Maximize mu0^T w - c max_i w on the simplex. The top-k assets (largest
     * k with sum_{i<=k} (mu_i - mu_k) < c, at least 1, ties at the boundary
     * included) receive 1/k each.
     */
    inline WorstCaseResult risk_neutral_worstcase(const Eigen::VectorXd& mu0, double c)
    {
        const auto n = mu0.size();
        if (n == 0 || !mu0.allFinite())
            throw Error(Errc::invalid_argument, "need finite expected returns");
        if (!(c >= 0.0) || !std::isfinite(c))
            throw Error(Errc::invalid_argument, "penalty c must be non-negative");

        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return mu0(x) > mu0(y); });

        Eigen::Index k = 1;
        double prefix = mu0(order[0]);
        for (Eigen::Index j = 2; j <= n; ++j)
        {
            const double mk = mu0(order[static_cast<std::size_t>(j - 1)]);
            const double gap = (prefix + mk) - static_cast<double>(j) * mk;
            const bool tied = mk == mu0(order[static_cast<std::size_t>(k - 1)]);
            if (gap < c || tied)
            {
                k = j;
                prefix += mk;
            }
            else
                break;
        }

        WorstCaseResult res;
        auto& w = res.weights.w;
        w = Eigen::VectorXd::Zero(n);
        const double lambda = (prefix - c) / static_cast<double>(k);
        auto& kkt = res.kkt;
        kkt.lambda = lambda;
        kkt.eta = Eigen::VectorXd::Zero(n);
        kkt.nu = Eigen::VectorXd::Zero(n);
        for (Eigen::Index j = 0; j < n; ++j)
        {
            const int i = order[static_cast<std::size_t>(j)];
            if (j < k)
            {
                w(i) = 1.0 / static_cast<double>(k);
                kkt.nu(i) = mu0(i) - lambda;
                kkt.ir.push_back(i);
            }
            else
            {
                kkt.eta(i) = lambda - mu0(i);
                kkt.i0.push_back(i);
            }
        }
        res.weights.r = 1.0 / static_cast<double>(k);
        res.weights.objective = mu0.dot(w) - c * res.weights.r;

        const Eigen::VectorXd stat = mu0 - Eigen::VectorXd::Constant(n, lambda) + kkt.eta - kkt.nu;
        kkt.stationarity = std::max(stat.cwiseAbs().maxCoeff(), std::abs(kkt.nu.sum() - c));
        kkt.primal = std::max({std::abs(w.sum() - 1.0), std::max(0.0, -w.minCoeff()),
                               std::max(0.0, (w.array() - res.weights.r).maxCoeff())});
        kkt.dual = std::max(0.0, -std::min(kkt.eta.minCoeff(), kkt.nu.minCoeff()));
        kkt.slackness = std::max(kkt.eta.cwiseProduct(w).cwiseAbs().maxCoeff(),
                                 kkt.nu.cwiseProduct((w.array() - res.weights.r).matrix()).cwiseAbs().maxCoeff());
        return res;
    }

    /// c = |<Y_min>| from the prediction deviations.
    inline WorstCaseResult risk_neutral_worstcase(const Eigen::VectorXd& mu0, const Eigen::VectorXd& sigma0)
    {
        return risk_neutral_worstcase(mu0, std::abs(expected_min_gaussians(sigma0)));
    }

    namespace detail
    {
        /// Euclidean projection onto the probability simplex.
        inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& y)
        {
            std::vector<double> s(y.data(), y.data() + y.size());
            std::sort(s.begin(), s.end(), std::greater<>());
            double cum = 0.0, tau = 0.0;
            for (std::size_t j = 0; j < s.size(); ++j)
            {
                cum += s[j];
                const double t = (cum - 1.0) / static_cast<double>(j + 1);
                if (s[j] - t > 0.0)
                    tau = t;
            }
            return (y.array() - tau).max(0.0).matrix();
        }

        /// clip(y - tau, 0, cap) with tau chosen so that the entries sum to 1.
        inline Eigen::VectorXd capped_shift(const Eigen::VectorXd& y, double cap, double& tau_out)
        {
            double lo = y.minCoeff() - cap - 1.0, hi = y.maxCoeff();
            auto total = [&](double t) { return (y.array() - t).max(0.0).min(cap).sum(); };
            for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it)
            {
                const double mid = 0.5 * (lo + hi);
                (total(mid) > 1.0 ? lo : hi) = mid;
            }
            tau_out = 0.5 * (lo + hi);
            return (y.array() - tau_out).max(0.0).min(cap).matrix();
        }

        /// Projection of (y, s) onto {(w, r) : 1^T w = 1, 0 <= w <= r}. The
        /// reduced function of r is convex with derivative
        /// (r - s) - sum over capped entries of (y_i - tau - r).
        inline Eigen::VectorXd project_capped(const Eigen::VectorXd& y, double s, double& r_out)
        {
            const double n = static_cast<double>(y.size());
            auto slope = [&](double r) {
                double tau = 0.0;
                const Eigen::VectorXd w = capped_shift(y, r, tau);
                double pull = 0.0;
                for (Eigen::Index i = 0; i < y.size(); ++i)
                    if (w(i) >= r)
                        pull += y(i) - tau - r;
                return (r - s) - pull;
            };
            double lo = 1.0 / n, hi = std::max({1.0, s, 1.0 / n});
            if (slope(lo) >= 0.0)
                hi = lo;
            for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it)
            {
                const double mid = 0.5 * (lo + hi);
                (slope(mid) > 0.0 ? hi : lo) = mid;
            }
            const double r = hi;
            double tau = 0.0;
            Eigen::VectorXd w = capped_shift(y, r, tau);
            // Exact bookkeeping: the cap equals the largest weight.
            r_out = w.maxCoeff();
            return w;
        }

        /// Certificate for min r + 1/2 w^T Q w - l^T w over {1^T w = 1, 0 <= w <= r},
        /// given the active sets read off the iterate. Solves the linear KKT
        /// system in (w_I+, r, lambda) and checks signs.
        inline std::optional<std::pair<SimplexWeights, KktCertificate>>
        polish_capped(const Eigen::MatrixXd& q, const Eigen::VectorXd& l, const Eigen::VectorXd& w_iter, double r_iter)
        {
            const auto n = w_iter.size();
            const double tol = 1e-12 * std::max(1.0, r_iter);
            KktCertificate kkt;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                if (w_iter(i) <= tol)
                    kkt.i0.push_back(static_cast<int>(i));
                else if (w_iter(i) >= r_iter - tol)
                    kkt.ir.push_back(static_cast<int>(i));
                else
                    kkt.iplus.push_back(static_cast<int>(i));
            }
            if (kkt.ir.empty())
                return std::nullopt;

            const auto p = static_cast<Eigen::Index>(kkt.iplus.size());
            // w = E x + R r with x = w_I+.
            Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, p);
            for (Eigen::Index j = 0; j < p; ++j)
                e(kkt.iplus[static_cast<std::size_t>(j)], j) = 1.0;
            Eigen::VectorXd rvec = Eigen::VectorXd::Zero(n);
            for (int i : kkt.ir)
                rvec(i) = 1.0;

            const Eigen::Index m = p + 2;
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
            const Eigen::MatrixXd qe = q * e;
            const Eigen::VectorXd qr = q * rvec;
            for (Eigen::Index j = 0; j < p; ++j)
            {
                const int i = kkt.iplus[static_cast<std::size_t>(j)];
                a.row(j).head(p) = qe.row(i);
                a(j, p) = qr(i);
                a(j, p + 1) = -1.0;
                rhs(j) = l(i);
            }
            // sum_{Ir} (lambda + l_i - (Q w)_i) = 1
            for (int i : kkt.ir)
            {
                a.row(p).head(p) -= qe.row(i);
                a(p, p) -= qr(i);
                a(p, p + 1) += 1.0;
                rhs(p) += -l(i);
            }
            rhs(p) += 1.0;
            // 1^T w = 1
            a.row(p + 1).head(p).setOnes();
            a(p + 1, p) = static_cast<double>(kkt.ir.size());
            rhs(p + 1) = 1.0;

            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            if (!lu.isInvertible())
                return std::nullopt;
            const Eigen::VectorXd sol = lu.solve(rhs);
            if (!sol.allFinite())
                return std::nullopt;

            SimplexWeights out;
            out.w = e * sol.head(p) + rvec * sol(p);
            out.r = sol(p);
            kkt.lambda = sol(p + 1);
            const Eigen::VectorXd grad = q * out.w - l;
            kkt.eta = Eigen::VectorXd::Zero(n);
            kkt.nu = Eigen::VectorXd::Zero(n);
            for (int i : kkt.i0)
                kkt.eta(i) = grad(i) - kkt.lambda;
            for (int i : kkt.ir)
                kkt.nu(i) = kkt.lambda - grad(i);

            const Eigen::VectorXd stat = grad - Eigen::VectorXd::Constant(n, kkt.lambda) - kkt.eta + kkt.nu;
            kkt.stationarity = std::max(stat.cwiseAbs().maxCoeff(), std::abs(kkt.nu.sum() - 1.0));
            kkt.primal = std::max({std::abs(out.w.sum() - 1.0), std::max(0.0, -out.w.minCoeff()),
                                   std::max(0.0, (out.w.array() - out.r).maxCoeff())});
            kkt.dual = std::max(0.0, -std::min(kkt.eta.minCoeff(), kkt.nu.minCoeff()));
            kkt.slackness =
                std::max(kkt.eta.cwiseProduct(out.w).cwiseAbs().maxCoeff(),
                         kkt.nu.cwiseProduct((out.w.array() - out.r).matrix()).cwiseAbs().maxCoeff());
            out.objective = out.r + 0.5 * out.w.dot(q * out.w) - l.dot(out.w);
            return std::make_pair(out, kkt);
        }

        /// FISTA on min r + 1/2 w^T Q w - l^T w over the capped simplex, with
        /// an active-set polish every few iterations. Starts at w = 1/N.
        inline WorstCaseResult solve_capped_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& l,
                                               int max_iter = 100000)
        {
            const auto n = q.rows();
            const double n_d = static_cast<double>(n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
            const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-12);
            const double step = 1.0 / lip;

            Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / n_d), w_prev = w;
            double r = 1.0 / n_d, r_prev = r;
            Eigen::VectorXd yw = w;
            double yr = r, t = 1.0;
            std::optional<WorstCaseResult> best;

            auto try_polish = [&](int iter) {
                auto cand = polish_capped(q, l, w, r);
                if (!cand)
                    return false;
                const double res = cand->second.residual();
                if (!best || res < best->kkt.residual())
                {
                    best = WorstCaseResult{cand->first, cand->second};
                    best->weights.iterations = iter;
                }
                return res < 1e-8;
            };

            for (int it = 1; it <= max_iter; ++it)
            {
                const Eigen::VectorXd g = q * yw - l;
                w_prev = w;
                r_prev = r;
                w = project_capped(yw - step * g, yr - step, r);
                const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                const double mom = (t - 1.0) / t_next;
                yw = w + mom * (w - w_prev);
                yr = r + mom * (r - r_prev);
                t = t_next;
                if ((it <= 50 || it % 25 == 0) && try_polish(it))
                    return *best;
            }
            if (try_polish(max_iter))
                return *best;
            if (best && best->kkt.residual() <= 1e-6)
                return *best;
            throw Error(Errc::non_convergence, "MM portfolio KKT residual above 1e-6 after iteration cap");
        }

        /// min 1/2 w^T Q w - l^T w on the simplex (no cap), projected
        /// gradient with an active-set polish.
        inline Eigen::VectorXd solve_simplex_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& l,
                                                int max_iter = 100000)
        {
            const auto n = q.rows();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
            const double step = 1.0 / std::max(es.eigenvalues().maxCoeff(), 1e-12);
            Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), w_prev = w, y = w;
            double t = 1.0;

            auto polish = [&]() -> std::optional<Eigen::VectorXd> {
                std::vector<int> act;
                for (Eigen::Index i = 0; i < n; ++i)
                    if (w(i) > 0.0)
                        act.push_back(static_cast<int>(i));
                const auto p = static_cast<Eigen::Index>(act.size());
                Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p + 1, p + 1);
                Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
                for (Eigen::Index j = 0; j < p; ++j)
                {
                    for (Eigen::Index k = 0; k < p; ++k)
                        a(j, k) = q(act[j], act[k]);
                    a(j, p) = -1.0;
                    a(p, j) = 1.0;
                    rhs(j) = l(act[j]);
                }
                rhs(p) = 1.0;
                Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
                if (!lu.isInvertible())
                    return std::nullopt;
                const Eigen::VectorXd sol = lu.solve(rhs);
                Eigen::VectorXd cand = Eigen::VectorXd::Zero(n);
                for (Eigen::Index j = 0; j < p; ++j)
                    cand(act[j]) = sol(j);
                const double lambda = sol(p);
                const Eigen::VectorXd grad = q * cand - l;
                double worst = std::max(0.0, -cand.minCoeff());
                for (Eigen::Index i = 0; i < n; ++i)
                    if (cand(i) == 0.0)
                        worst = std::max(worst, lambda - grad(i));
                if (worst > 1e-10)
                    return std::nullopt;
                return cand;
            };

            for (int it = 1; it <= max_iter; ++it)
            {
                w_prev = w;
                w = project_simplex(y - step * (q * y - l));
                const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                y = w + ((t - 1.0) / t_next) * (w - w_prev);
                t = t_next;
                if (it % 25 == 0)
                    if (auto c = polish())
                        return *c;
            }
            if (auto c = polish())
                return *c;
            return w;
        }
    } // namespace detail

    /// Minimum-variance portfolio on the long-only simplex.
    inline Eigen::VectorXd min_variance_simplex(const Eigen::MatrixXd& sigma)
    {
        numeric::spd_factor(sigma, Errc::singular_covariance, "covariance is not positive definite");
        return detail::solve_simplex_qp(sigma, Eigen::VectorXd::Zero(sigma.rows()));
    }

    /// Expected-return information for the MM portfolio: the linear term is
    /// mu0 / |<Y_min>| with <Y_min> from the prediction deviations sigma0.
    struct WorstCasePrior
    {
        Eigen::VectorXd mu0;
        Eigen::VectorXd sigma0;
    };

    struct MmResult
    {
        SimplexWeights weights;
        KktCertificate kkt;
        double b = 0.0;
        double y_min = 0.0;      ///< <Y_min>, 0 without a prior
        double implied_a = 0.0;  ///< b |<Y_min>|
        double entropy = 0.0;
        double n_eff = 0.0;
    };

    /**
     * MM portfolio: min max_i w_i + b/2 w^T Sigma w (- mu0^T w / |<Y_min>|)
     * on the simplex, via the epigraph form with a KKT certificate.
     */
    inline MmResult mm_portfolio(const Eigen::MatrixXd& sigma, double b,
                                 const std::optional<WorstCasePrior>& prior = std::nullopt)
    {
        if (!(b > 0.0) || !std::isfinite(b))
            throw Error(Errc::invalid_argument, "trade-off b must be positive");
        numeric::spd_factor(sigma, Errc::singular_covariance, "covariance is not positive definite");
        const auto n = sigma.rows();
        MmResult res;
        res.b = b;
        Eigen::VectorXd l = Eigen::VectorXd::Zero(n);
        if (prior)
        {
            if (prior->mu0.size() != n || prior->sigma0.size() != n)
                throw Error(Errc::invalid_argument, "prior sizes disagree with covariance");
            res.y_min = expected_min_gaussians(prior->sigma0);
            l = prior->mu0 / std::abs(res.y_min);
            res.implied_a = b * std::abs(res.y_min);
        }
        auto solved = detail::solve_capped_qp(b * sigma, l);
        res.weights = solved.weights;
        res.kkt = solved.kkt;
        res.entropy = weight_entropy(res.weights.w);
        res.n_eff = std::exp(res.entropy);
        return res;
    }

    struct MmAldResult
    {
        SimplexWeights weights;
        double margin = 0.0;   ///< D(w) > 0
        double residual = 0.0; ///< max-norm of the last Newton step
    };

    /**
     * ALD MM portfolio: min max_i w_i - b log D(w) (- mu0^T w) on the
     * simplex with D(w) = 1 - a^2/2 w^T Sigma w + a mu_a^T w > 0. Projected
     * Newton with capped-QP subproblems and Armijo backtracking; starts at
     * 1/N, or at the point of largest D when 1/N lies outside the domain.
     */
    inline MmAldResult mm_portfolio_ald(const MultiAld& m, const RiskAversion& a, double b,
                                        const std::optional<Eigen::VectorXd>& mu0 = std::nullopt,
                                        int max_iter = 500)
    {
        if (!(b > 0.0) || !std::isfinite(b))
            throw Error(Errc::invalid_argument, "trade-off b must be positive");
        numeric::spd_factor(m.sigma, Errc::singular_covariance, "scale matrix is not positive definite");
        const auto n = m.mu.size();
        const double av = a.value();
        const Eigen::VectorXd l = mu0 ? *mu0 : Eigen::VectorXd::Zero(n);
        if (l.size() != n)
            throw Error(Errc::invalid_argument, "mu0 size disagrees with scale matrix");

        auto domain = [&](const Eigen::VectorXd& w) {
            return 1.0 - 0.5 * av * av * w.dot(m.sigma * w) + av * m.mu_a.dot(w);
        };
        auto objective = [&](const Eigen::VectorXd& w, double r) {
            const double d = domain(w);
            if (!(d > 0.0))
                return std::numeric_limits<double>::infinity();
            return r - b * std::log(d) - l.dot(w);
        };
        auto gradient = [&](const Eigen::VectorXd& w) {
            return Eigen::VectorXd(b * (av * av * (m.sigma * w) - av * m.mu_a) / domain(w) - l);
        };

        Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        if (!(domain(w) > 0.0))
        {
            // Largest D on the simplex: min a^2/2 w^T Sigma w - a mu_a^T w.
            const Eigen::VectorXd wd = detail::solve_simplex_qp(av * av * m.sigma, av * m.mu_a);
            if (!(domain(wd) > 0.0))
                throw Error(Errc::infeasible_domain, "no simplex point satisfies the ALD domain constraint");
            w = wd;
        }
        auto total = [&](const Eigen::VectorXd& v) { return objective(v, v.maxCoeff()); };
        // Projected Newton: each step solves the capped QP built from the
        // local quadratic model of -b log D - l^T w, then backtracks.
        double f = total(w);
        double mapping = std::numeric_limits<double>::infinity();
        int it = 0;
        for (; it < max_iter; ++it)
        {
            const double d = domain(w);
            const Eigen::VectorXd dd = av * m.mu_a - av * av * (m.sigma * w);
            const Eigen::MatrixXd h = b * (av * av * m.sigma / d + dd * dd.transpose() / (d * d));
            const Eigen::VectorXd g = gradient(w);
            const Eigen::VectorXd v = detail::solve_capped_qp(h, h * w - g).weights.w;
            const Eigen::VectorXd dir = v - w;
            mapping = dir.cwiseAbs().maxCoeff();
            if (mapping < 1e-13)
                break;
            const double slope = g.dot(dir) + v.maxCoeff() - w.maxCoeff();
            double t = 1.0;
            bool accepted = false;
            for (int k = 0; k < 60; ++k, t *= 0.5)
            {
                const Eigen::VectorXd cand = w + t * dir;
                const double fc = total(cand);
                if (fc <= f + 1e-4 * t * std::min(slope, 0.0) + 1e-15 * std::abs(f))
                {
                    w = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                break;
        }
        MmAldResult res;
        res.weights.w = w;
        res.weights.r = w.maxCoeff();
        res.weights.objective = objective(w, res.weights.r);
        res.weights.iterations = it;
        res.margin = domain(w);
        res.residual = mapping;
        return res;
    }

    struct BStarResult
    {
        double b = 0.0;
        double entropy = 0.0;
        double target_entropy = 0.0;
        double s_eq = 0.0;
        double s_mv = 0.0;
        double n_eff = 0.0;
        bool no_bracket = false;
        Eigen::VectorXd w;
    };

    /**
     * b* from the entropy heuristic: S(w(b*)) = (S_eq + S_mv)/2, or
     * S = log(neff_fraction N) when a target fraction is given. Bisection
     * runs on log b over [b_lo, b_hi]. When S_mv is within 1e-6 of S_eq,
     * or the target lies outside the bracket, no_bracket is set and the
     * closest end (the geometric midpoint in the degenerate case) is used.
     */
    inline BStarResult entropy_bstar(const Eigen::MatrixXd& sigma, std::optional<double> neff_fraction = std::nullopt,
                                     double b_lo = 1e-6, double b_hi = 1e6)
    {
        if (!(b_lo > 0.0) || !(b_hi > b_lo))
            throw Error(Errc::invalid_argument, "search range needs 0 < b_lo < b_hi");
        if (neff_fraction && !(*neff_fraction > 0.0 && *neff_fraction <= 1.0))
            throw Error(Errc::invalid_argument, "N_eff fraction must lie in (0, 1]");
        const double n = static_cast<double>(sigma.rows());
        BStarResult res;
        res.s_eq = std::log(n);
        res.s_mv = weight_entropy(min_variance_simplex(sigma));
        res.target_entropy = neff_fraction ? std::log(*neff_fraction * n) : 0.5 * (res.s_eq + res.s_mv);

        auto entropy_at = [&](double log_b) { return weight_entropy(mm_portfolio(sigma, std::exp(log_b)).weights.w); };
        auto finish = [&](double log_b) {
            res.b = std::exp(log_b);
            res.w = mm_portfolio(sigma, res.b).weights.w;
            res.entropy = weight_entropy(res.w);
            res.n_eff = std::exp(res.entropy);
            return res;
        };

        double lo = std::log(b_lo), hi = std::log(b_hi);
        if (std::abs(res.s_mv - res.s_eq) < 1e-6)
        {
            res.no_bracket = true;
            return finish(0.5 * (lo + hi));
        }
        // Entropy falls from about S_eq at small b toward S_mv at large b.
        const double s_lo = entropy_at(lo) - res.target_entropy;
        const double s_hi = entropy_at(hi) - res.target_entropy;
        if (s_lo < 0.0 || s_hi > 0.0)
        {
            res.no_bracket = true;
            return finish(std::abs(s_lo) <= std::abs(s_hi) ? lo : hi);
        }
        for (int it = 0; it < 200; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            const double s = entropy_at(mid) - res.target_entropy;
            if (std::abs(s) < 1e-7 || hi - lo < 1e-12)
                return finish(mid);
            (s > 0.0 ? lo : hi) = mid;
        }
        return finish(0.5 * (lo + hi));
    }

} // namespace portrules
