#include "oracles.hpp"
#include "portrules/alloc_uni.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace portrules;

namespace
{
    double brute_force(double m, double sigma, double kappa, double a, double sigma0)
    {
        return oracle::ald_uni_brute_force(m, sigma, kappa, a, sigma0);
    }

    struct Instance
    {
        double mu, sigma, kappa, a, mu0, sigma0;
    };

    std::vector<Instance> random_instances(int count, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> mu(-1.0, 1.0), sig(0.2, 2.0), kap(0.6, 1.6), av(0.5, 3.0),
            s0(0.0, 1.5);
        std::vector<Instance> out;
        for (int i = 0; i < count; ++i)
            out.push_back({mu(rng), sig(rng), kap(rng), av(rng), mu(rng), s0(rng)});
        return out;
    }
} // namespace

TEST(AllocUni, MarkowitzKnownPoint)
{
    const auto u = markowitz_weight(0.10, 0.57, 0.0, RiskAversion(1.0));
    EXPECT_NEAR(u.w, 0.3078, 5e-5);
    EXPECT_NEAR(u.w, 0.10 / (0.57 * 0.57), 1e-15);
    EXPECT_EQ(u.branch, UniBranch::closed_form);
}

TEST(AllocUni, RiskAversionMustBePositive)
{
    EXPECT_THROW(RiskAversion(0.0), Error);
    EXPECT_THROW(RiskAversion(-1.0), Error);
    EXPECT_THROW(RiskAversion{std::numeric_limits<double>::infinity()}, Error);
}

TEST(AllocUni, ClosedFormMatchesBruteForce)
{
    for (const auto& in : random_instances(200, 1))
    {
        const auto u = ald_weight(AldParams(in.mu, in.sigma, in.kappa), 0.0, RiskAversion(in.a));
        const double ref = brute_force(in.mu, in.sigma, in.kappa, in.a, 0.0);
        EXPECT_NEAR(u.w, ref, 1e-7 * std::max(1.0, std::abs(ref)));
    }
}

TEST(AllocUni, RationalizedFormEqualsPrintedForm)
{
    for (const auto& in : random_instances(50, 2))
    {
        const double k = in.kappa, s = in.sigma, m = in.mu, a = in.a;
        const double printed = (std::sqrt(2.0 * (k * k + 1) * (k * k + 1) * m * m + 4.0 * k * k * s * s) -
                                std::sqrt(2.0) * (k * k - 1) * m - 2.0 * k * s) /
                               (2.0 * a * k * m * s);
        const double w = ald_weight(AldParams(m, s, k), 0.0, RiskAversion(a)).w;
        EXPECT_NEAR(w, printed, 1e-9 * std::max(1.0, std::abs(w)));
    }
}

TEST(AllocUni, ZeroLocationLimit)
{
    const AldParams p(0.0, 0.57, 1.2);
    const auto u = ald_weight(p, 0.0, RiskAversion(2.0));
    EXPECT_EQ(u.branch, UniBranch::asymptotic);
    EXPECT_NEAR(u.w, -(1.44 - 1.0) / (std::sqrt(2.0) * 2.0 * 0.57 * 1.2), 1e-15);
    // Continuity through m = 0.
    const double eps = 1e-9;
    EXPECT_NEAR(ald_weight(AldParams(eps, 0.57, 1.2), 0.0, RiskAversion(2.0)).w, u.w, 1e-8);
    EXPECT_NEAR(ald_weight(AldParams(-eps, 0.57, 1.2), 0.0, RiskAversion(2.0)).w, u.w, 1e-8);
}

TEST(AllocUni, CashReturnShiftsLocation)
{
    const RiskAversion a(1.5);
    EXPECT_DOUBLE_EQ(ald_weight(AldParams(0.3, 0.5, 1.1), 0.1, a).w, ald_weight(AldParams(0.2, 0.5, 1.1), 0.0, a).w);
}

TEST(AllocUni, MirrorSymmetry)
{
    for (const auto& in : random_instances(50, 3))
    {
        const RiskAversion a(in.a);
        const double w = ald_weight(AldParams(in.mu, in.sigma, in.kappa), 0.0, a).w;
        const double mirrored = ald_weight(AldParams(-in.mu, in.sigma, 1.0 / in.kappa), 0.0, a).w;
        EXPECT_NEAR(w, -mirrored, 1e-12 * std::max(1.0, std::abs(w)));
    }
}

TEST(AllocUni, SymmetricCaseApproachesMarkowitzForSmallRatio)
{
    const RiskAversion a(1.0);
    for (double ratio : {1e-2, 1e-3, 1e-4})
    {
        const double sigma = 0.57, mu = ratio * sigma;
        const double w_ald = ald_weight(AldParams(mu, sigma, 1.0), 0.0, a).w;
        const double w_mk = markowitz_weight(mu, sigma, 0.0, a).w;
        EXPECT_NEAR(w_ald / w_mk, 1.0, 2.0 * ratio * ratio + 1e-12) << ratio;
    }
}

TEST(AllocUni, SmallRatioExpansionIsFirstOrderAccurate)
{
    const RiskAversion a(1.0);
    for (double kappa : {0.9, 1.042, 1.13})
    {
        double prev_err = 1.0;
        for (double ratio : {1e-1, 1e-2, 1e-3})
        {
            const AldParams p(ratio * 0.57, 0.57, kappa);
            const double exact = ald_weight(p, 0.0, a).w;
            const double approx = ald_weight_asymptotic(p, a, AsymptoticRegime::small_ratio).w;
            const double err = std::abs(exact - approx);
            EXPECT_LT(err, prev_err);
            prev_err = err;
        }
        EXPECT_LT(prev_err, 1e-5);
    }
    const auto terms = small_ratio_terms(AldParams(0.10, 0.57, 1.0));
    EXPECT_DOUBLE_EQ(terms.skew, 0.0);
    EXPECT_NEAR(terms.signal, 0.10 / 0.57, 1e-15);
}

TEST(AllocUni, LargeRatioSaturates)
{
    const RiskAversion a(2.0);
    const AldParams big(1e6, 0.57, 1.1);
    const double cap = ald_weight_asymptotic(big, a, AsymptoticRegime::large_ratio).w;
    EXPECT_NEAR(cap, std::sqrt(2.0) / (2.0 * 0.57 * 1.1), 1e-15);
    EXPECT_NEAR(ald_weight(big, 0.0, a).w, cap, 1e-5);
    // Monotone approach from below.
    double prev = 0.0;
    for (double mu : {0.1, 1.0, 10.0, 100.0})
    {
        const double w = ald_weight(AldParams(mu, 0.57, 1.1), 0.0, a).w;
        EXPECT_GT(w, prev);
        EXPECT_LT(w, cap);
        prev = w;
    }
}

TEST(AllocUni, LongOnlyThreshold)
{
    const RiskAversion a(1.0);
    for (double kappa : {1.01, 1.05, 1.13})
    {
        const AldParams p(0.0, 0.57, kappa);
        // Exact sign change of the weight is at m = sigma (k^2 - 1)/(sqrt(2) k).
        const double exact = p.sigma * (kappa * kappa - 1.0) / (std::sqrt(2.0) * kappa);
        EXPECT_NEAR(ald_weight(AldParams(exact, 0.57, kappa), 0.0, a).w, 0.0, 1e-14);
        EXPECT_GT(ald_weight(AldParams(exact * 1.01, 0.57, kappa), 0.0, a).w, 0.0);
        EXPECT_LT(ald_weight(AldParams(exact * 0.99, 0.57, kappa), 0.0, a).w, 0.0);
        // The linearized threshold differs by sigma (k - 1)^2 / (sqrt(2) k).
        EXPECT_NEAR(long_only_threshold(p) - exact, p.sigma * (kappa - 1.0) * (kappa - 1.0) / (std::sqrt(2.0) * kappa),
                    1e-15);
    }
    EXPECT_NEAR(long_only_threshold(AldParams(0.0, 1.0, 1.13)), std::sqrt(2.0) * 0.13, 1e-15);
}

TEST(AllocUni, WeightStaysInsideDomain)
{
    for (const auto& in : random_instances(100, 4))
    {
        const AldParams p(in.mu, in.sigma, in.kappa);
        const auto u = ald_weight(p, 0.0, RiskAversion(in.a));
        EXPECT_GT(ald_domain_value(u.w, p.sigma, p.mu_a(), in.a), 0.0);
        EXPECT_TRUE(std::isfinite(u.objective));
    }
}

TEST(AllocUni, MarginalCardanoMatchesBruteForce)
{
    for (const auto& in : random_instances(200, 5))
    {
        const AldParams p(in.mu0, in.sigma, in.kappa);
        const auto u = ald_weight_marginal(LocationPrior(in.mu0, in.sigma0), p, 0.0, RiskAversion(in.a));
        const double ref = brute_force(in.mu0, in.sigma, in.kappa, in.a, in.sigma0);
        EXPECT_NEAR(u.w, ref, 1e-7 * std::max(1.0, std::abs(ref)));
        EXPECT_EQ(u.branch, UniBranch::cardano);
    }
}

TEST(AllocUni, MarginalWithoutUncertaintyIsPlainRule)
{
    for (const auto& in : random_instances(50, 6))
    {
        const RiskAversion a(in.a);
        const AldParams p(in.mu, in.sigma, in.kappa);
        const double plain = ald_weight(p, 0.0, a).w;
        const double marg = ald_weight_marginal(LocationPrior(in.mu, 0.0), p, 0.0, a).w;
        EXPECT_NEAR(marg, plain, 1e-10 * std::max(1.0, std::abs(plain)));
        const double mk = markowitz_weight(in.mu, in.sigma, 0.0, a).w;
        EXPECT_NEAR(markowitz_weight_marginal(LocationPrior(in.mu, 0.0), in.sigma, 0.0, a).w, mk, 1e-15);
    }
}

TEST(AllocUni, PriorUncertaintyShrinksWeights)
{
    const RiskAversion a(1.0);
    const AldParams p(0.5, 0.57, 1.0);
    double prev = std::abs(ald_weight(p, 0.0, a).w);
    for (double s0 : {0.1, 0.5, 1.0, 5.0, 50.0})
    {
        const double w = std::abs(ald_weight_marginal(LocationPrior(0.5, s0), p, 0.0, a).w);
        EXPECT_LT(w, prev);
        prev = w;
    }
    // Noisy limit: Markowitz with sigma0 as a ridge, w ~ mu0 / (a sigma0^2).
    const double s0 = 1e3;
    EXPECT_NEAR(ald_weight_marginal(LocationPrior(0.5, s0), p, 0.0, a).w / (0.5 / (s0 * s0)), 1.0, 1e-5);
}

TEST(AllocUni, CubicIsScaledStationarity)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (const auto& in : random_instances(30, 7))
    {
        const double k = in.kappa, s = in.sigma, s0 = in.sigma0, a = in.a, m0 = in.mu0;
        const double mu_a = s / std::sqrt(2.0) * (1.0 / k - k);
        const double c = std::sqrt(2.0) * (k * k - 1.0);
        const double w = u(rng) / (a * s);
        const double d = ald_domain_value(w, s, mu_a, a);
        const double grad = m0 - a * s0 * s0 * w + (mu_a - a * s * s * w) / d;
        const double cubic = a * a * a * k * s * s * s0 * s0 * w * w * w +
                             a * a * (c * s * s0 * s0 - k * m0 * s * s) * w * w -
                             a * (c * m0 * s + 2.0 * k * (s * s + s0 * s0)) * w - c * s + 2.0 * k * m0;
        EXPECT_NEAR(cubic, 2.0 * k * d * grad, 1e-10 * (1.0 + std::abs(cubic)));
    }
}

TEST(AllocUni, PriorValidation)
{
    EXPECT_THROW(LocationPrior(0.0, -1.0), Error);
    EXPECT_THROW(LocationPrior(NAN, 1.0), Error);
}
