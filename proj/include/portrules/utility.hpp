/**
 * @file utility.hpp
 * @brief CARA and CRRA utilities and the strong types for their risk
 * aversion coefficients.
 */

#pragma once

#include "portrules/error.hpp"

#include <cmath>

namespace portrules
{

    /// CARA risk-aversion coefficient a > 0.
    class RiskAversion
    {
    public:
        explicit RiskAversion(double a) : a_(a)
        {
            if (!std::isfinite(a) || a <= 0.0)
                throw Error(Errc::invalid_argument, "risk aversion must be finite and positive");
        }
        double value() const { return a_; }

    private:
        double a_;
    };

    /// CRRA relative risk aversion gamma >= 0.
    class CrraGamma
    {
    public:
        explicit CrraGamma(double gamma) : g_(gamma)
        {
            if (!std::isfinite(gamma) || gamma < 0.0)
                throw Error(Errc::invalid_argument, "CRRA gamma must be finite and non-negative");
        }
        double value() const { return g_; }

    private:
        double g_;
    };

    /// (1 - exp(-a x)) / a, and x itself at a = 0.
    inline double cara_utility(double x, double a)
    {
        if (a == 0.0)
            return x;
        return -std::expm1(-a * x) / a;
    }

    /// (x^(1-gamma) - 1) / (1 - gamma), and ln x at gamma = 1.
    inline double crra_utility(double x, double gamma)
    {
        if (!(x > 0.0))
            throw Error(Errc::invalid_argument, "CRRA utility needs a positive outcome");
        if (std::abs(gamma - 1.0) < 1e-8)
            return std::log(x);
        const double lx = std::log(x);
        return std::expm1((1.0 - gamma) * lx) / (1.0 - gamma);
    }

} // namespace portrules
