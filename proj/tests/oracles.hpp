// Brute-force reference solvers used by the tests. They share no code with
// the library beyond Eigen.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle
{

    /// Grid scan followed by golden-section search on the best bracket.
    inline double maximize_1d(const std::function<double(double)>& f, double lo, double hi, int grid = 4000)
    {
        double best_x = lo, best_f = -std::numeric_limits<double>::infinity();
        const double h = (hi - lo) / grid;
        for (int i = 1; i < grid; ++i)
        {
            const double x = lo + i * h;
            const double v = f(x);
            if (v > best_f)
            {
                best_f = v;
                best_x = x;
            }
        }
        double a = std::max(lo, best_x - h), b = std::min(hi, best_x + h);
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = f(c), fd = f(d);
        for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it)
        {
            if (fc > fd)
            {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            }
            else
            {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        return 0.5 * (a + b);
    }

    /// Root of a decreasing function by plain bisection.
    inline double bisect_decreasing(const std::function<double(double)>& g, double lo, double hi)
    {
        for (int it = 0; it < 400; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi)
                break;
            (g(mid) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    /// Zooming grid search over a 2-D box: each level scans a (2k+1)^2
    /// lattice around the incumbent and shrinks the spacing.
    inline Eigen::Vector2d maximize_2d(const std::function<double(const Eigen::Vector2d&)>& f, Eigen::Vector2d lo,
                                       Eigen::Vector2d hi, int grid = 200)
    {
        Eigen::Vector2d best = 0.5 * (lo + hi);
        double best_f = -std::numeric_limits<double>::infinity();
        Eigen::Vector2d h = (hi - lo) / grid;
        for (int i = 0; i <= grid; ++i)
            for (int j = 0; j <= grid; ++j)
            {
                const Eigen::Vector2d x(lo(0) + i * h(0), lo(1) + j * h(1));
                const double v = f(x);
                if (v > best_f)
                {
                    best_f = v;
                    best = x;
                }
            }
        constexpr int k = 6;
        while (h.maxCoeff() > 1e-13)
        {
            const Eigen::Vector2d centre = best;
            for (int i = -k; i <= k; ++i)
                for (int j = -k; j <= k; ++j)
                {
                    const Eigen::Vector2d x = centre + Eigen::Vector2d(i * h(0), j * h(1));
                    const double v = f(x);
                    if (v > best_f)
                    {
                        best_f = v;
                        best = x;
                    }
                }
            h /= 3.0;
        }
        return best;
    }

    /// Minimizer of f over the probability simplex for N = 2 or 3 by a
    /// zooming lattice in the first N-1 coordinates.
    inline Eigen::VectorXd minimize_simplex(const std::function<double(const Eigen::VectorXd&)>& f, int n,
                                            int grid = 120)
    {
        auto lift = [n](double x, double y) {
            Eigen::VectorXd w(n);
            if (n == 2)
                w << x, 1.0 - x;
            else
                w << x, y, 1.0 - x - y;
            return w;
        };
        auto feasible = [](const Eigen::VectorXd& w) { return (w.array() >= -1e-15).all(); };
        Eigen::VectorXd best = Eigen::VectorXd::Constant(n, 1.0 / n);
        double best_f = f(best);
        double h = 1.0 / grid;
        for (int i = 0; i <= grid; ++i)
            for (int j = 0; j <= (n == 2 ? 0 : grid - i); ++j)
            {
                const Eigen::VectorXd w = lift(i * h, j * h);
                const double v = f(w);
                if (v < best_f)
                {
                    best_f = v;
                    best = w;
                }
            }
        constexpr int k = 6;
        while (h > 1e-13)
        {
            const Eigen::VectorXd centre = best;
            for (int i = -k; i <= k; ++i)
                for (int j = (n == 2 ? 0 : -k); j <= (n == 2 ? 0 : k); ++j)
                {
                    Eigen::VectorXd w = lift(centre(0) + i * h, (n == 2 ? 0.0 : centre(1) + j * h));
                    w = w.cwiseMax(0.0);
                    w /= w.sum();
                    if (!feasible(w))
                        continue;
                    const double v = f(w);
                    if (v < best_f)
                    {
                        best_f = v;
                        best = w;
                    }
                }
            h /= 3.0;
        }
        return best;
    }

    /// Exact enumeration of simplex points with denominator `den`.
    inline Eigen::VectorXd maximize_simplex_lattice(const std::function<double(const Eigen::VectorXd&)>& f, int n,
                                                    int den)
    {
        Eigen::VectorXd best, w(n);
        double best_f = -std::numeric_limits<double>::infinity();
        std::vector<int> c(static_cast<std::size_t>(n), 0);
        std::function<void(int, int)> rec = [&](int idx, int left) {
            if (idx == n - 1)
            {
                c[static_cast<std::size_t>(idx)] = left;
                for (int i = 0; i < n; ++i)
                    w(i) = static_cast<double>(c[static_cast<std::size_t>(i)]) / den;
                const double v = f(w);
                if (v > best_f + 1e-12)
                {
                    best_f = v;
                    best = w;
                }
                return;
            }
            for (int k = 0; k <= left; ++k)
            {
                c[static_cast<std::size_t>(idx)] = k;
                rec(idx + 1, left - k);
            }
        };
        rec(0, den);
        return best;
    }

    /// Maximizer of m w - a/2 s0^2 w^2 + log(D)/a over the ALD domain
    /// D = 1 - a^2 s^2 w^2/2 + a mu_a w > 0: golden section on the objective,
    /// then bisection on the analytic slope to reach double precision.
    inline double ald_uni_brute_force(double m, double sigma, double kappa, double a, double sigma0)
    {
        const double mu_a = sigma / std::sqrt(2.0) * (1.0 / kappa - kappa);
        auto f = [&](double w) {
            const double d = 1.0 - 0.5 * a * a * w * w * sigma * sigma + a * w * mu_a;
            if (d <= 0.0)
                return -1e300;
            return m * w - 0.5 * a * sigma0 * sigma0 * w * w + std::log(d) / a;
        };
        auto slope = [&](double w) {
            const double d = 1.0 - 0.5 * a * a * w * w * sigma * sigma + a * w * mu_a;
            return m - a * sigma0 * sigma0 * w + (mu_a - a * sigma * sigma * w) / d;
        };
        const double qa = 0.5 * a * a * sigma * sigma, qb = a * mu_a;
        const double disc = std::sqrt(qb * qb + 4.0 * qa);
        const double lo = (qb - disc) / (2.0 * qa), hi = (qb + disc) / (2.0 * qa);
        const double pad = 1e-12 * (hi - lo);
        const double w0 = maximize_1d(f, lo + pad, hi - pad);
        const double h = 1e-4 * (hi - lo);
        const double l = std::max(lo + pad, w0 - h), r = std::min(hi - pad, w0 + h);
        if (slope(l) > 0.0 && slope(r) < 0.0)
            return bisect_decreasing(slope, l, r);
        return w0;
    }

    /// Two-asset ALD maximizer of l.w - a/2 w'diag(var0)w + log(D)/a by the
    /// zooming grid, over a box containing the whole domain.
    inline Eigen::Vector2d ald_multi_brute_force_2d(const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma,
                                                    const Eigen::Vector2d& kappa, const Eigen::Vector2d& var0,
                                                    double a)
    {
        const Eigen::Vector2d mu_a =
            (sigma.diagonal().array() / 2.0).sqrt() * (1.0 / kappa.array() - kappa.array());
        auto f = [&](const Eigen::Vector2d& w) {
            const double d = 1.0 - a * a / 2.0 * w.dot(sigma * w) + a * mu_a.dot(w);
            if (d <= 0.0)
                return -1e300;
            return mu.dot(w) - a / 2.0 * w.dot(var0.cwiseProduct(w)) + std::log(d) / a;
        };
        // |w| < R with a^2 lmin R^2 / 2 = 1 + a |mu_a| R.
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sigma);
        const double qa = a * a * es.eigenvalues().minCoeff() / 2.0, qb = a * mu_a.norm();
        const double r = (qb + std::sqrt(qb * qb + 4.0 * qa)) / (2.0 * qa);
        return maximize_2d(f, Eigen::Vector2d(-r, -r), Eigen::Vector2d(r, r));
    }

    /// Random SPD matrix with eigenvalues in [lo, hi].
    inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double lo = 0.2, double hi = 3.0)
    {
        std::normal_distribution<double> g(0.0, 1.0);
        std::uniform_real_distribution<double> u(lo, hi);
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = g(rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
        const Eigen::MatrixXd q = qr.householderQ();
        Eigen::VectorXd ev(n);
        for (int i = 0; i < n; ++i)
            ev(i) = u(rng);
        Eigen::MatrixXd s = q * ev.asDiagonal() * q.transpose();
        return 0.5 * (s + s.transpose());
    }

    /// Correlated Gaussian sample (rows = observations) with covariance sigma.
    inline Eigen::MatrixXd gaussian_sample(const Eigen::MatrixXd& sigma, int n, std::mt19937_64& rng)
    {
        std::normal_distribution<double> g(0.0, 1.0);
        const Eigen::MatrixXd l = sigma.llt().matrixL();
        Eigen::MatrixXd z(n, sigma.rows());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < sigma.rows(); ++j)
                z(i, j) = g(rng);
        return z * l.transpose();
    }

} // namespace oracle
