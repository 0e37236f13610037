#include "oracles.hpp"
#include "portrules/worstcase.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace portrules;

namespace
{
    Eigen::VectorXd vec(std::initializer_list<double> v)
    {
        Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
        Eigen::Index i = 0;
        for (double e : v)
            x(i++) = e;
        return x;
    }

    double mm_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& s, double b, const Eigen::VectorXd& l)
    {
        return w.maxCoeff() + 0.5 * b * w.dot(s * w) - l.dot(w);
    }

    void expect_certificate(const KktCertificate& k, double tol = 1e-8)
    {
        EXPECT_LT(k.stationarity, tol);
        EXPECT_LT(k.primal, tol);
        EXPECT_LT(k.dual, tol);
        EXPECT_LT(k.slackness, tol);
    }
} // namespace

TEST(Worstcase, EntropyIdentities)
{
    EXPECT_NEAR(weight_entropy(Eigen::VectorXd::Constant(4, 0.25)), std::log(4.0), 1e-15);
    EXPECT_NEAR(effective_count(Eigen::VectorXd::Constant(4, 0.25)), 4.0, 1e-12);
    EXPECT_EQ(weight_entropy(vec({1.0, 0.0, 0.0})), 0.0);
}

TEST(Worstcase, ExpectedMinSmallCases)
{
    EXPECT_NEAR(expected_min_gaussians(vec({1.0})), 0.0, 1e-12);
    EXPECT_NEAR(expected_min_gaussians(vec({1.0, 1.0})), -1.0 / std::sqrt(M_PI), 1e-10);
    // Unequal scales: E[min] = -sqrt((s1^2 + s2^2) / (2 pi)).
    EXPECT_NEAR(expected_min_gaussians(vec({1.0, 2.0})), -std::sqrt(5.0 / (2.0 * M_PI)), 1e-10);
    // Three standard normals: -3 / (2 sqrt(pi)).
    EXPECT_NEAR(expected_min_gaussians(vec({1.0, 1.0, 1.0})), -1.5 / std::sqrt(M_PI), 1e-10);
    EXPECT_THROW(expected_min_gaussians(vec({1.0, 0.0})), Error);
}

TEST(Worstcase, ExpectedMinTranslationAndScale)
{
    const Eigen::VectorXd s = vec({0.5, 1.0, 1.5, 0.7});
    const Eigen::VectorXd m = vec({0.1, -0.2, 0.3, 0.0});
    const double base = expected_min_gaussians(s, m);
    EXPECT_NEAR(expected_min_gaussians(s, (m.array() + 2.5).matrix()), base + 2.5, 1e-8);
    EXPECT_NEAR(expected_min_gaussians(3.0 * s, 3.0 * m), 3.0 * base, 1e-8);
}

TEST(Worstcase, ExpectedMinMatchesMonteCarlo)
{
    const Eigen::VectorXd s = vec({0.5, 1.0, 1.5, 0.7, 2.0});
    const Eigen::VectorXd m = vec({0.1, -0.2, 0.3, 0.0, 0.5});
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    constexpr int draws = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < draws; ++k)
    {
        double lo = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 5; ++i)
            lo = std::min(lo, m(i) + s(i) * g(rng));
        sum += lo;
        sq += lo * lo;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sq / draws - mean * mean) / draws);
    EXPECT_NEAR(expected_min_gaussians(s, m), mean, 3.0 * se);
}

TEST(Worstcase, ExpectedMinExtremeValueScaling)
{
    const double n = 1e4;
    const double v = expected_min_gaussians(Eigen::VectorXd::Constant(10000, 0.3));
    EXPECT_LT(v, 0.0);
    // The leading-order law is approached slowly from above; the exact value
    // is 3.851616 sigma at this N (scipy quad).
    EXPECT_NEAR(v / 0.3, -3.851616, 1e-6);
    EXPECT_GT(v / (-0.3 * std::sqrt(2.0 * std::log(n))), 0.85);
}

TEST(Worstcase, RiskNeutralKnownPoints)
{
    const Eigen::VectorXd mu = vec({3.0, 2.0, 1.0});
    EXPECT_EQ(risk_neutral_worstcase(mu, 0.5).weights.w, vec({1.0, 0.0, 0.0}));
    EXPECT_EQ(risk_neutral_worstcase(mu, 1.5).weights.w, vec({0.5, 0.5, 0.0}));
    EXPECT_EQ(risk_neutral_worstcase(mu, 0.0).weights.w, vec({1.0, 0.0, 0.0}));
    const auto all = risk_neutral_worstcase(mu, 3.5);
    EXPECT_TRUE(all.weights.w.isApprox(Eigen::VectorXd::Constant(3, 1.0 / 3.0), 1e-15));
    for (double c : {0.0, 0.5, 1.5, 3.5, 10.0})
        expect_certificate(risk_neutral_worstcase(mu, c).kkt, 1e-12);
    EXPECT_THROW(risk_neutral_worstcase(mu, -1.0), Error);
}

TEST(Worstcase, RiskNeutralTiesShareWeight)
{
    const auto r = risk_neutral_worstcase(vec({2.0, 3.0, 3.0, 1.0}), 0.0);
    EXPECT_EQ(r.weights.w, vec({0.0, 0.5, 0.5, 0.0}));
    expect_certificate(r.kkt, 1e-12);
}

TEST(Worstcase, RiskNeutralPermutationInvariance)
{
    const Eigen::VectorXd mu = vec({0.3, 1.2, -0.4, 0.9, 0.1});
    const auto base = risk_neutral_worstcase(mu, 0.8).weights.w;
    std::vector<int> perm{3, 0, 4, 1, 2};
    Eigen::VectorXd pm(5);
    for (int i = 0; i < 5; ++i)
        pm(i) = mu(perm[i]);
    const auto w = risk_neutral_worstcase(pm, 0.8).weights.w;
    for (int i = 0; i < 5; ++i)
        EXPECT_EQ(w(i), base(perm[i]));
}

TEST(Worstcase, RiskNeutralMatchesLatticeOracle)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> mu(-1.0, 1.0), cc(0.0, 2.0);
    std::uniform_int_distribution<int> nn(2, 4);
    for (int t = 0; t < 200; ++t)
    {
        const int n = nn(rng);
        Eigen::VectorXd m(n);
        for (int i = 0; i < n; ++i)
            m(i) = mu(rng);
        const double c = cc(rng);
        // 1/k points all lie on the lattice with denominator 12.
        auto f = [&](const Eigen::VectorXd& w) { return m.dot(w) - c * w.maxCoeff(); };
        const auto ref = oracle::maximize_simplex_lattice(f, n, 12);
        const auto got = risk_neutral_worstcase(m, c);
        EXPECT_NEAR(f(got.weights.w), f(ref), 1e-12) << t;
        EXPECT_LT((got.weights.w - ref).cwiseAbs().maxCoeff(), 1e-4) << t;
    }
}

TEST(Worstcase, RiskNeutralFromDeviations)
{
    const Eigen::VectorXd mu = vec({3.0, 2.0, 1.0});
    const auto r = risk_neutral_worstcase(mu, Eigen::VectorXd::Constant(3, 1.0));
    // c = 3 / (2 sqrt(pi)) = 0.846 keeps only the best asset.
    EXPECT_EQ(r.weights.w, vec({1.0, 0.0, 0.0}));
}

TEST(Worstcase, MmKnownPoints)
{
    for (int n : {2, 5, 8})
        for (double b : {1e-3, 1.0, 50.0})
        {
            const auto r = mm_portfolio(Eigen::MatrixXd::Identity(n, n), b);
            EXPECT_LT((r.weights.w.array() - 1.0 / n).abs().maxCoeff(), 1e-12);
            EXPECT_NEAR(r.n_eff, n, 1e-9);
        }
    const Eigen::MatrixXd d = vec({1.0, 4.0}).asDiagonal();
    const auto r = mm_portfolio(d, 1.0);
    EXPECT_NEAR(r.weights.w(0), 0.6, 1e-6);
    EXPECT_NEAR(r.weights.w(1), 0.4, 1e-6);
    EXPECT_NEAR(r.weights.r, 0.6, 1e-10);
    expect_certificate(r.kkt);
}

TEST(Worstcase, MmLimits)
{
    std::mt19937_64 rng(29);
    for (int t = 0; t < 5; ++t)
    {
        const Eigen::MatrixXd s = oracle::random_spd(5, rng);
        const auto mv = min_variance_simplex(s);
        EXPECT_LT((mm_portfolio(s, 1e6).weights.w - mv).cwiseAbs().maxCoeff(), 1e-3);
        EXPECT_LT((mm_portfolio(s, 1e-6).weights.w.array() - 0.2).abs().maxCoeff(), 1e-3);
    }
}

TEST(Worstcase, MmDiagonalStructure)
{
    const Eigen::VectorXd var = vec({0.5, 0.8, 1.0, 2.0, 4.0, 9.0});
    const Eigen::MatrixXd s = var.asDiagonal();
    for (double b : {0.5, 2.0, 10.0})
    {
        const auto r = mm_portfolio(s, b);
        expect_certificate(r.kkt);
        ASSERT_FALSE(r.kkt.ir.empty());
        // Uncapped weights are lambda / (b sigma_i^2).
        for (int i : r.kkt.iplus)
            EXPECT_NEAR(r.weights.w(i), r.kkt.lambda / (b * var(i)), 1e-8);
        for (int i : r.kkt.ir)
            EXPECT_NEAR(r.weights.w(i), r.weights.r, 1e-10);
        // Capped assets are the low-variance ones.
        for (int i : r.kkt.ir)
            for (int j : r.kkt.iplus)
                EXPECT_LT(var(i), var(j));
    }
}

TEST(Worstcase, MmConcentrationGrowsWithB)
{
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd s = oracle::random_spd(6, rng);
    double prev_r = 0.0, prev_s = std::log(6.0) + 1e-12;
    for (double b : {1e-2, 0.1, 1.0, 10.0, 100.0})
    {
        const auto r = mm_portfolio(s, b);
        EXPECT_GE(r.weights.r, prev_r - 1e-9);
        EXPECT_LE(r.entropy, prev_s + 1e-9);
        prev_r = r.weights.r;
        prev_s = r.entropy;
        expect_certificate(r.kkt);
        EXPECT_NEAR(r.weights.w.sum(), 1.0, 1e-10);
        EXPECT_GE(r.weights.w.minCoeff(), 0.0);
    }
}

TEST(Worstcase, MmMatchesSimplexOracle)
{
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> bb(0.05, 20.0), mu(-0.5, 0.5);
    for (int t = 0; t < 200; ++t)
    {
        const int n = 2 + t % 2;
        const Eigen::MatrixXd s = oracle::random_spd(n, rng);
        const double b = bb(rng);
        Eigen::VectorXd l = Eigen::VectorXd::Zero(n);
        std::optional<WorstCasePrior> prior;
        if (t % 3 == 0)
        {
            Eigen::VectorXd m0(n);
            for (int i = 0; i < n; ++i)
                m0(i) = mu(rng);
            const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(n, 0.4);
            prior = WorstCasePrior{m0, s0};
            l = m0 / std::abs(expected_min_gaussians(s0));
        }
        const auto got = mm_portfolio(s, b, prior);
        const auto ref = oracle::minimize_simplex([&](const Eigen::VectorXd& w) { return mm_objective(w, s, b, l); }, n);
        EXPECT_LT((got.weights.w - ref).cwiseAbs().maxCoeff(), 1e-4) << t;
        EXPECT_LE(mm_objective(got.weights.w, s, b, l), mm_objective(ref, s, b, l) + 1e-10) << t;
        expect_certificate(got.kkt);
    }
}

TEST(Worstcase, MmLargeUniverse)
{
    std::mt19937_64 rng(41);
    const Eigen::MatrixXd s = oracle::random_spd(50, rng, 0.05, 4.0);
    for (double b : {0.1, 5.0, 200.0})
    {
        const auto r = mm_portfolio(s, b);
        expect_certificate(r.kkt);
    }
}

TEST(Worstcase, MmPriorReportsImpliedRiskAversion)
{
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
    const auto r = mm_portfolio(s, 2.0, WorstCasePrior{vec({0.9, 0.45, 0.0}), vec({1.0, 1.0, 1.0})});
    EXPECT_NEAR(r.y_min, -1.5 / std::sqrt(M_PI), 1e-9);
    EXPECT_NEAR(r.implied_a, 2.0 * 1.5 / std::sqrt(M_PI), 1e-9);
    // The cap binds on the two leaders (grid search gives 0.3825, 0.3825, 0.235).
    EXPECT_NEAR(r.weights.w(0), r.weights.w(1), 1e-9);
    EXPECT_NEAR(r.weights.w(2), 0.235, 5e-3);
    EXPECT_GT(r.weights.w(1), r.weights.w(2));
    EXPECT_THROW(mm_portfolio(s, 0.0), Error);
    EXPECT_THROW(mm_portfolio(s, 1.0, WorstCasePrior{vec({0.3}), vec({1.0})}), Error);
}

TEST(Worstcase, MmAldSymmetricCases)
{
    const int n = 4;
    const MultiAld m(Eigen::VectorXd::Zero(n), 0.3 * Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Ones(n));
    const auto r = mm_portfolio_ald(m, RiskAversion(1.0), 2.0);
    EXPECT_LT((r.weights.w.array() - 0.25).abs().maxCoeff(), 1e-8);
    EXPECT_GT(r.margin, 0.0);
}

TEST(Worstcase, MmAldCloseToGaussianForSmallA)
{
    std::mt19937_64 rng(43);
    for (int t = 0; t < 5; ++t)
    {
        const Eigen::MatrixXd s = oracle::random_spd(4, rng);
        const MultiAld m(Eigen::VectorXd::Zero(4), s, Eigen::VectorXd::Ones(4));
        const double a = 0.05, b = 400.0;
        const auto ald = mm_portfolio_ald(m, RiskAversion(a), b);
        const auto gauss = mm_portfolio(s, b * a * a);
        EXPECT_LT((ald.weights.w - gauss.weights.w).cwiseAbs().maxCoeff(), 1e-3) << t;
    }
}

TEST(Worstcase, MmAldMatchesSimplexOracle)
{
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> kap(0.8, 1.25), mu(-0.2, 0.2), bb(0.1, 3.0);
    for (int t = 0; t < 20; ++t)
    {
        const Eigen::MatrixXd s = oracle::random_spd(3, rng, 0.2, 1.5);
        Eigen::VectorXd kappa(3), m0(3);
        for (int i = 0; i < 3; ++i)
        {
            kappa(i) = kap(rng);
            m0(i) = mu(rng);
        }
        const MultiAld m(m0, s, kappa);
        const double a = 1.0, b = bb(rng);
        auto f = [&](const Eigen::VectorXd& w) {
            const double d = 1.0 - 0.5 * a * a * w.dot(s * w) + a * m.mu_a.dot(w);
            return d > 0.0 ? w.maxCoeff() - b * std::log(d) - m0.dot(w) : 1e300;
        };
        const auto got = mm_portfolio_ald(m, RiskAversion(a), b, m0);
        const auto ref = oracle::minimize_simplex(f, 3);
        EXPECT_LT((got.weights.w - ref).cwiseAbs().maxCoeff(), 1e-4) << t;
    }
}

TEST(Worstcase, MmAldInfeasibleDomain)
{
    // a^2/2 sigma^2 = 50 dominates on the whole simplex.
    const MultiAld m(Eigen::VectorXd::Zero(2), 100.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2));
    try
    {
        mm_portfolio_ald(m, RiskAversion(1.0), 1.0);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::infeasible_domain);
    }
}

TEST(Worstcase, EntropyBstarIdentityHasNoBracket)
{
    const auto r = entropy_bstar(Eigen::MatrixXd::Identity(4, 4));
    EXPECT_TRUE(r.no_bracket);
    EXPECT_NEAR(r.n_eff, 4.0, 1e-9);
}

TEST(Worstcase, EntropyBstarHitsMidpoint)
{
    const Eigen::MatrixXd d = vec({1.0, 4.0}).asDiagonal();
    const auto r = entropy_bstar(d);
    EXPECT_FALSE(r.no_bracket);
    EXPECT_NEAR(r.s_mv, weight_entropy(vec({0.8, 0.2})), 1e-8);
    EXPECT_LT(std::abs(r.entropy - 0.5 * (r.s_eq + r.s_mv)), 1e-4);
    EXPECT_LT(std::abs(weight_entropy(mm_portfolio(d, r.b).weights.w) - r.target_entropy), 1e-4);
    EXPECT_GE(r.entropy, r.s_mv);
    EXPECT_LE(r.entropy, r.s_eq);
}

TEST(Worstcase, EntropyBstarNeffTarget)
{
    std::mt19937_64 rng(53);
    const Eigen::MatrixXd s = oracle::random_spd(4, rng, 0.1, 5.0);
    const auto r = entropy_bstar(s, 0.75);
    if (!r.no_bracket)
        EXPECT_NEAR(r.n_eff, 3.0, 1e-3);
    EXPECT_THROW(entropy_bstar(s, 1.5), Error);
}
