/**
 * @file numeric.hpp
 * @brief Small numerical kernels shared by the allocation and fitting code:
 * polynomial roots, 1-D search, least squares, Gaussian helpers and SPD solves.
 */

#pragma once

#include "portrules/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace portrules
{
    namespace numeric
    {

        /// Real roots of a*x^2 + b*x + c, ascending. Degrades to the linear case
        /// when a == 0.
        inline std::vector<double> solve_quadratic(double a, double b, double c)
        {
            std::vector<double> roots;
            if (a == 0.0)
            {
                if (b != 0.0)
                    roots.push_back(-c / b);
                return roots;
            }
            const double disc = b * b - 4.0 * a * c;
            if (disc < 0.0)
                return roots;
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (b + std::copysign(sq, b));
            if (q == 0.0)
            {
                roots.push_back(0.0);
                roots.push_back(0.0);
                return roots;
            }
            roots.push_back(q / a);
            roots.push_back(c / q);
            std::sort(roots.begin(), roots.end());
            return roots;
        }

        /**
         * Real roots of a*x^3 + b*x^2 + c*x + d by Cardano's method on the
         * depressed cubic t^3 + p t + q.
         *
         * Three real roots use the trigonometric form. With one real root the
         * complex pair is kept as a (double) real root when its imaginary part
         * is below imag_tol relative to the root scale. Every root gets two
         * Newton polishing steps on the original polynomial.
         */
        inline std::vector<double> solve_cubic(double a, double b, double c, double d,
                                               double imag_tol = 1e-9)
        {
            const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
            if (scale == 0.0)
                return {};
            if (std::abs(a) <= 1e-14 * scale)
                return solve_quadratic(b, c, d);

            const double B = b / a, C = c / a, D = d / a;
            const double shift = B / 3.0;
            const double p = C - B * B / 3.0;
            const double q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
            const double disc = 0.25 * q * q + p * p * p / 27.0;

            std::vector<double> t;
            if (p == 0.0 && q == 0.0)
            {
                t = {0.0, 0.0, 0.0};
            }
            else if (disc <= 0.0)
            {
                const double m = 2.0 * std::sqrt(-p / 3.0);
                const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
                const double theta = std::acos(arg) / 3.0;
                for (int k = 0; k < 3; ++k)
                    t.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0));
            }
            else
            {
                const double sq = std::sqrt(disc);
                const double u = std::cbrt(-0.5 * q - std::copysign(sq, q));
                const double v = (u == 0.0) ? 0.0 : -p / (3.0 * u);
                const double t0 = u + v;
                t.push_back(t0);
                const double imag = 0.5 * std::sqrt(3.0) * std::abs(u - v);
                const double root_scale = std::max(1.0, std::abs(t0));
                if (imag < imag_tol * root_scale)
                {
                    t.push_back(-0.5 * t0);
                    t.push_back(-0.5 * t0);
                }
            }

            std::vector<double> roots;
            roots.reserve(t.size());
            for (double ti : t)
            {
                double x = ti - shift;
                for (int it = 0; it < 2; ++it)
                {
                    const double f = ((a * x + b) * x + c) * x + d;
                    const double df = (3.0 * a * x + 2.0 * b) * x + c;
                    if (df == 0.0)
                        break;
                    const double step = f / df;
                    if (!std::isfinite(step))
                        break;
                    x -= step;
                }
                roots.push_back(x);
            }
            std::sort(roots.begin(), roots.end());
            return roots;
        }

        /// Golden-section maximization of a unimodal f on [lo, hi].
        template <typename F>
        double golden_section_max(F&& f, double lo, double hi, double tol = 1e-10,
                                  int max_iter = 500)
        {
            const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
            double x1 = hi - inv_phi * (hi - lo);
            double x2 = lo + inv_phi * (hi - lo);
            double f1 = f(x1), f2 = f(x2);
            for (int it = 0; it < max_iter && (hi - lo) > tol; ++it)
            {
                if (f1 < f2)
                {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + inv_phi * (hi - lo);
                    f2 = f(x2);
                }
                else
                {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - inv_phi * (hi - lo);
                    f1 = f(x1);
                }
            }
            return 0.5 * (lo + hi);
        }

        /// Root of a continuous f with f(lo) and f(hi) of opposite sign.
        template <typename F>
        double bisect(F&& f, double lo, double hi, double tol = 1e-14, int max_iter = 200)
        {
            double flo = f(lo);
            for (int it = 0; it < max_iter && (hi - lo) > tol * std::max(1.0, std::abs(lo)); ++it)
            {
                const double mid = 0.5 * (lo + hi);
                const double fm = f(mid);
                if (fm == 0.0)
                    return mid;
                if ((fm < 0.0) == (flo < 0.0))
                {
                    lo = mid;
                    flo = fm;
                }
                else
                {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }

        struct LinearFit
        {
            double slope = 0.0;
            double intercept = 0.0;
            double r2 = 0.0;
        };

        /// Ordinary least squares of y on x. A series with zero total variance
        /// is fitted exactly and reports r2 = 1.
        inline LinearFit ordinary_least_squares(std::span<const double> x, std::span<const double> y)
        {
            if (x.size() != y.size())
                throw Error(Errc::invalid_argument, "regression inputs differ in length");
            if (x.size() < 2)
                throw Error(Errc::degenerate_regression, "need at least two points");
            const double n = static_cast<double>(x.size());
            double mx = 0.0, my = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                mx += x[i];
                my += y[i];
            }
            mx /= n;
            my /= n;
            double sxx = 0.0, sxy = 0.0, syy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                sxx += (x[i] - mx) * (x[i] - mx);
                sxy += (x[i] - mx) * (y[i] - my);
                syy += (y[i] - my) * (y[i] - my);
            }
            if (sxx <= 1e-300 || sxx <= 1e-24 * n * std::max(1.0, mx * mx))
                throw Error(Errc::degenerate_regression, "regressor has no spread");
            LinearFit fit;
            fit.slope = sxy / sxx;
            fit.intercept = my - fit.slope * mx;
            if (syy <= 1e-28 * n * std::max(1.0, my * my))
            {
                fit.r2 = 1.0;
            }
            else
            {
                double sse = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i)
                {
                    const double e = y[i] - fit.intercept - fit.slope * x[i];
                    sse += e * e;
                }
                fit.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
            }
            return fit;
        }

        inline double normal_pdf(double x, double mean = 0.0, double sd = 1.0)
        {
            const double z = (x - mean) / sd;
            return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
        }

        inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0)
        {
            return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
        }

        /// log P(Z > z) for a standard normal, accurate far into the upper tail.
        inline double log_normal_sf(double z)
        {
            if (z < 25.0)
                return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
            // Mills-ratio asymptotic series.
            const double z2 = z * z;
            const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
            return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
        }

        inline double log_normal_pdf(double z)
        {
            return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
        }

        /// Symmetric within tol relative to the largest entry.
        inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-12)
        {
            if (m.rows() != m.cols())
                return false;
            const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
            return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
        }

        /// Cholesky factor of an SPD matrix, raising `failure` when the input
        /// is not symmetric positive definite.
        inline Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& m, Errc failure,
                                                      const char* what)
        {
            if (m.rows() != m.cols() || m.rows() == 0)
                throw Error(Errc::invalid_argument, "matrix must be square and non-empty");
            if (!m.allFinite())
                throw Error(failure, what);
            if (!is_symmetric(m))
                throw Error(failure, std::string(what) + " (not symmetric)");
            Eigen::LLT<Eigen::MatrixXd> llt(m);
            if (llt.info() != Eigen::Success)
                throw Error(failure, what);
            // Pivots at rounding level mean a rank-deficient input slipped through.
            const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().cwiseAbs2();
            if (pivots.minCoeff() <= 1e-13 * m.diagonal().cwiseAbs().maxCoeff())
                throw Error(failure, std::string(what) + " (numerically singular)");
            return llt;
        }

        inline Eigen::VectorXd spd_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                                         Errc failure = Errc::singular_covariance)
        {
            return spd_factor(m, failure, "matrix is not positive definite").solve(rhs);
        }

        inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, Errc failure)
        {
            const auto llt = spd_factor(m, failure, "matrix is not positive definite");
            Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
            return 0.5 * (inv + inv.transpose());
        }

    } // namespace numeric
} // namespace portrules
