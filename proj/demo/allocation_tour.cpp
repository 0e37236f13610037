// Walks through the allocation rules on small hand-made inputs and prints
// the resulting weights.

#include "portrules/portrules.hpp"

#include <cstdio>

using namespace portrules;

int main()
{
    const RiskAversion a(1.0);

    std::printf("single asset, sigma = 0.57, kappa = 1.042\n");
    std::printf("%8s %12s %12s\n", "mu", "markowitz", "ald");
    for (double mu : {0.0, 0.05, 0.10, 0.50, 2.0, 10.0})
    {
        const AldParams p(mu, 0.57, 1.042);
        std::printf("%8.2f %12.5f %12.5f\n", mu, markowitz_weight(mu, 0.57, 0.0, a).w, ald_weight(p, 0.0, a).w);
    }

    std::printf("\nmarginalized over mu ~ N(0.10, sigma0^2)\n");
    for (double s0 : {0.0, 0.1, 0.5, 2.0})
    {
        const LocationPrior prior(0.10, s0);
        const AldParams p(0.10, 0.57, 1.042);
        std::printf("sigma0 = %4.1f  markowitz %10.5f  ald %10.5f\n", s0,
                    markowitz_weight_marginal(prior, 0.57, 0.0, a).w, ald_weight_marginal(prior, p, 0.0, a).w);
    }

    Eigen::MatrixXd sigma(3, 3);
    sigma << 1.0, 0.3, 0.1, 0.3, 2.0, 0.4, 0.1, 0.4, 4.0;
    Eigen::VectorXd mu(3);
    mu << 0.10, 0.12, 0.20;
    Eigen::VectorXd kappa(3);
    kappa << 1.05, 1.10, 0.95;

    const auto g = gaussian_weights(MultiGaussian(mu, sigma), a);
    const auto ald = ald_weights(MultiAld(mu, sigma, kappa), a);
    std::printf("\nthree assets\n  gaussian  %9.5f %9.5f %9.5f\n  ald       %9.5f %9.5f %9.5f  (D = %.4f)\n", g.w(0),
                g.w(1), g.w(2), ald.w(0), ald.w(1), ald.w(2), ald.margin);

    std::printf("\nMM portfolio as b grows\n");
    for (double b : {1e-3, 0.1, 1.0, 10.0, 1e3})
    {
        const auto mm = mm_portfolio(sigma, b);
        std::printf("  b = %7.3g  w = (%.4f, %.4f, %.4f)  N_eff = %.3f\n", b, mm.weights.w(0), mm.weights.w(1),
                    mm.weights.w(2), mm.n_eff);
    }
    const auto bs = entropy_bstar(sigma);
    std::printf("  entropy heuristic b* = %.4g, N_eff = %.3f\n", bs.b, bs.n_eff);
    return 0;
}
