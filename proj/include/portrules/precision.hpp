/**
 * @file precision.hpp
 * @brief Shrinkage covariance, adjacency-constrained precision estimation,
 * partial correlations and the volatility/correlation split.
 */

#pragma once

#include "portrules/error.hpp"
#include "portrules/numeric.hpp"
#include "portrules/returns_io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace portrules
{

    /// Symmetric 0/1 matrix with unit diagonal.
    class AdjacencyMatrix
    {
    public:
        explicit AdjacencyMatrix(Eigen::MatrixXi a) : a_(std::move(a))
        {
            if (a_.rows() != a_.cols() || a_.rows() == 0)
                throw Error(Errc::invalid_argument, "adjacency must be square and non-empty");
            for (Eigen::Index i = 0; i < a_.rows(); ++i)
            {
                if (a_(i, i) != 1)
                    throw Error(Errc::invalid_argument, "adjacency needs a unit diagonal");
                for (Eigen::Index j = 0; j < a_.cols(); ++j)
                {
                    if (a_(i, j) != 0 && a_(i, j) != 1)
                        throw Error(Errc::invalid_argument, "adjacency entries must be 0 or 1");
                    if (a_(i, j) != a_(j, i))
                        throw Error(Errc::invalid_argument, "adjacency must be symmetric");
                }
            }
        }

        static AdjacencyMatrix full(Eigen::Index n) { return AdjacencyMatrix(Eigen::MatrixXi::Ones(n, n)); }

        /// Block structure from one group label per asset.
        static AdjacencyMatrix blocks(const std::vector<std::string>& group)
        {
            const auto n = static_cast<Eigen::Index>(group.size());
            Eigen::MatrixXi a(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    a(i, j) = group[static_cast<std::size_t>(i)] == group[static_cast<std::size_t>(j)] ? 1 : 0;
            return AdjacencyMatrix(a);
        }

        Eigen::Index size() const { return a_.rows(); }
        bool linked(Eigen::Index i, Eigen::Index j) const { return a_(i, j) == 1; }
        const Eigen::MatrixXi& matrix() const { return a_; }

        std::vector<Eigen::Index> neighborhood(Eigen::Index i) const
        {
            std::vector<Eigen::Index> out;
            for (Eigen::Index j = 0; j < a_.cols(); ++j)
                if (a_(i, j) == 1)
                    out.push_back(j);
            return out;
        }

        /// Connected components, each sorted ascending.
        std::vector<std::vector<Eigen::Index>> components() const
        {
            const auto n = a_.rows();
            std::vector<int> label(static_cast<std::size_t>(n), -1);
            std::vector<std::vector<Eigen::Index>> out;
            for (Eigen::Index s = 0; s < n; ++s)
            {
                if (label[static_cast<std::size_t>(s)] >= 0)
                    continue;
                const int id = static_cast<int>(out.size());
                out.emplace_back();
                std::vector<Eigen::Index> stack{s};
                label[static_cast<std::size_t>(s)] = id;
                while (!stack.empty())
                {
                    const auto v = stack.back();
                    stack.pop_back();
                    out.back().push_back(v);
                    for (Eigen::Index u = 0; u < n; ++u)
                        if (a_(v, u) == 1 && label[static_cast<std::size_t>(u)] < 0)
                        {
                            label[static_cast<std::size_t>(u)] = id;
                            stack.push_back(u);
                        }
                }
                std::sort(out.back().begin(), out.back().end());
            }
            return out;
        }

    private:
        Eigen::MatrixXi a_;
    };

    struct ShrunkCovariance
    {
        Eigen::MatrixXd sample;   ///< unbiased sample covariance S
        Eigen::MatrixXd shrunk;   ///< (1 - rho) S + rho nu I
        double intensity = 0.0;   ///< rho
        double target = 0.0;      ///< nu = tr(S) / N
        Eigen::Index observations = 0;
    };

    struct PrecisionModel
    {
        Eigen::MatrixXd theta;
        AdjacencyMatrix adjacency;
        double shrinkage = 0.0;
        double psd_shift = 0.0; ///< diagonal shift added to restore PSD, usually 0
        Eigen::MatrixXd shrunk_covariance;
    };

    struct SeparationModel
    {
        Eigen::VectorXd vol;   ///< diagonal of Lambda
        Eigen::MatrixXd corr;  ///< R
    };

    /// Unbiased sample covariance of the rows of x (observations x assets).
    inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x)
    {
        if (x.rows() < 2)
            throw Error(Errc::insufficient_data, "need at least two observations");
        const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
        return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
    }

    /**
     * Shrinkage toward nu I with nu = tr(S)/N. With n observations and
     *
     *     Y1 = tr S,
     *     Y2 = (n-1)^2 / ((n-2)(n+1)) (tr S^2 - (tr S)^2 / (n-1))
     *
     * (unbiased for tr Sigma and tr Sigma^2 under normality), the intensity
     * is the Touloumis-type ratio
     *
     *     rho = (Y2 + Y1^2) / (n Y2 + (N - n + 1)/N Y1^2)
     *
     * clipped to [0, 1]. A single asset gets rho = 0.
     */
    inline ShrunkCovariance shrunk_covariance(const Eigen::MatrixXd& x)
    {
        const auto n = x.rows();
        const auto p = x.cols();
        if (p == 0)
            throw Error(Errc::insufficient_data, "no assets");
        if (n < 3)
            throw Error(Errc::insufficient_data, "shrinkage needs at least 3 common observations");
        if (!x.allFinite())
            throw Error(Errc::invalid_argument, "returns must be finite");
        ShrunkCovariance out;
        out.observations = n;
        out.sample = sample_covariance(x);
        const double nd = static_cast<double>(n), pd = static_cast<double>(p);
        const double y1 = out.sample.trace();
        if (!(y1 > 0.0))
            throw Error(Errc::degenerate_data, "every asset has constant returns");
        out.target = y1 / pd;
        if (p == 1)
        {
            out.shrunk = out.sample;
            return out;
        }
        const double tr_s2 = out.sample.cwiseAbs2().sum();
        const double y2 = (nd - 1.0) * (nd - 1.0) / ((nd - 2.0) * (nd + 1.0)) * (tr_s2 - y1 * y1 / (nd - 1.0));
        const double denom = nd * y2 + (pd - nd + 1.0) / pd * y1 * y1;
        double rho = denom > 0.0 ? (y2 + y1 * y1) / denom : 1.0;
        if (!std::isfinite(rho))
            rho = 1.0;
        out.intensity = std::clamp(rho, 0.0, 1.0);
        out.shrunk = (1.0 - out.intensity) * out.sample;
        out.shrunk.diagonal().array() += out.intensity * out.target;
        return out;
    }

    inline ShrunkCovariance shrunk_covariance(const ReturnPanel& panel) { return shrunk_covariance(panel.aligned()); }

    /**
     * Neighborhood assembly: row i of Theta is row i of the inverse of the
     * shrunk covariance restricted to N(i) = {j : A_ij = 1}. The result is
     * symmetrized, so entries outside the pattern of A are exactly zero. If
     * the symmetrized matrix has a negative eigenvalue, the diagonal is
     * shifted just enough to make it PSD, which keeps the zero pattern.
     */
    inline PrecisionModel estimate_precision(const Eigen::MatrixXd& x, const AdjacencyMatrix& adj)
    {
        if (adj.size() != x.cols())
            throw Error(Errc::invalid_argument, "adjacency size disagrees with the number of assets");
        const auto cov = shrunk_covariance(x);
        const auto p = x.cols();
        Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
        {
            const auto nb = adj.neighborhood(i);
            const auto k = static_cast<Eigen::Index>(nb.size());
            if (k >= cov.observations)
                throw Error(Errc::block_too_large, "neighborhood of asset " + std::to_string(i) + " has " +
                                                       std::to_string(k) + " members for " +
                                                       std::to_string(cov.observations) + " observations");
            Eigen::MatrixXd block(k, k);
            Eigen::Index self = 0;
            for (Eigen::Index r = 0; r < k; ++r)
            {
                if (nb[static_cast<std::size_t>(r)] == i)
                    self = r;
                for (Eigen::Index c = 0; c < k; ++c)
                    block(r, c) = cov.shrunk(nb[static_cast<std::size_t>(r)], nb[static_cast<std::size_t>(c)]);
            }
            const Eigen::MatrixXd inv = numeric::spd_inverse(block, Errc::singular_block);
            for (Eigen::Index c = 0; c < k; ++c)
                theta(i, nb[static_cast<std::size_t>(c)]) = inv(self, c);
        }
        theta = 0.5 * (theta + theta.transpose()).eval();

        PrecisionModel model{theta, adj, cov.intensity, 0.0, cov.shrunk};
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.theta, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin < 0.0)
        {
            model.psd_shift = -lmin + 1e-12 * model.theta.diagonal().cwiseAbs().maxCoeff();
            model.theta.diagonal().array() += model.psd_shift;
        }
        return model;
    }

    inline PrecisionModel estimate_precision(const ReturnPanel& panel, const AdjacencyMatrix& adj)
    {
        return estimate_precision(panel.aligned(), adj);
    }

    /// -Theta_ij / sqrt(Theta_ii Theta_jj) off the diagonal, +1 on it.
    inline Eigen::MatrixXd partial_correlation(const Eigen::MatrixXd& theta)
    {
        if (theta.rows() != theta.cols())
            throw Error(Errc::invalid_argument, "precision matrix must be square");
        if ((theta.diagonal().array() <= 0.0).any())
            throw Error(Errc::nonpositive_diagonal, "precision diagonal must be positive");
        const Eigen::VectorXd s = theta.diagonal().cwiseSqrt();
        Eigen::MatrixXd out(theta.rows(), theta.cols());
        for (Eigen::Index i = 0; i < theta.rows(); ++i)
            for (Eigen::Index j = 0; j < theta.cols(); ++j)
                out(i, j) = i == j ? 1.0 : (theta(i, j) == 0.0 ? 0.0 : -theta(i, j) / (s(i) * s(j)));
        return out;
    }

    /// Sigma = Lambda R Lambda with Lambda = diag(sqrt(Sigma_ii)).
    inline SeparationModel separate(const Eigen::MatrixXd& sigma)
    {
        if (sigma.rows() != sigma.cols())
            throw Error(Errc::invalid_argument, "covariance must be square");
        if ((sigma.diagonal().array() <= 0.0).any() || !sigma.allFinite())
            throw Error(Errc::nonpositive_variance, "variances must be positive");
        SeparationModel out;
        out.vol = sigma.diagonal().cwiseSqrt();
        const Eigen::VectorXd inv = out.vol.cwiseInverse();
        out.corr = inv.asDiagonal() * sigma * inv.asDiagonal();
        out.corr.diagonal().setOnes();
        return out;
    }

    inline Eigen::MatrixXd recombine(const Eigen::VectorXd& vol, const Eigen::MatrixXd& corr)
    {
        if (vol.size() != corr.rows() || corr.rows() != corr.cols())
            throw Error(Errc::invalid_argument, "volatility and correlation sizes disagree");
        if ((vol.array() <= 0.0).any())
            throw Error(Errc::nonpositive_variance, "volatilities must be positive");
        return vol.asDiagonal() * corr * vol.asDiagonal();
    }

    inline Eigen::MatrixXd recombine(const SeparationModel& m) { return recombine(m.vol, m.corr); }

    /// Inverse of Theta computed per connected component of the adjacency.
    inline Eigen::MatrixXd covariance_from_precision(const Eigen::MatrixXd& theta, const AdjacencyMatrix& adj)
    {
        if (theta.rows() != adj.size() || theta.cols() != adj.size())
            throw Error(Errc::invalid_argument, "precision and adjacency sizes disagree");
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
        for (const auto& comp : adj.components())
        {
            const auto k = static_cast<Eigen::Index>(comp.size());
            Eigen::MatrixXd block(k, k);
            for (Eigen::Index r = 0; r < k; ++r)
                for (Eigen::Index c = 0; c < k; ++c)
                    block(r, c) = theta(comp[static_cast<std::size_t>(r)], comp[static_cast<std::size_t>(c)]);
            const Eigen::MatrixXd inv = numeric::spd_inverse(block, Errc::singular_precision);
            for (Eigen::Index r = 0; r < k; ++r)
                for (Eigen::Index c = 0; c < k; ++c)
                    sigma(comp[static_cast<std::size_t>(r)], comp[static_cast<std::size_t>(c)]) = inv(r, c);
        }
        return sigma;
    }

    inline Eigen::MatrixXd covariance_from_precision(const PrecisionModel& model)
    {
        return covariance_from_precision(model.theta, model.adjacency);
    }

    /// 0/1 adjacency CSV with a header row and a leading column of asset ids,
    /// reordered to `assets`.
    inline AdjacencyMatrix read_adjacency_csv(std::istream& in, const std::vector<std::string>& assets)
    {
        std::string line;
        if (!std::getline(in, line))
            throw Error(Errc::empty_panel, "adjacency file is empty");
        auto header = detail::split(line, ',');
        if (header.empty())
            throw Error(Errc::empty_panel, "adjacency header is empty");
        header.erase(header.begin());
        std::map<std::string, Eigen::Index> col;
        for (std::size_t j = 0; j < header.size(); ++j)
            col[std::string(detail::trim(header[j]))] = static_cast<Eigen::Index>(j);

        std::map<std::string, std::vector<int>> rows;
        while (std::getline(in, line))
        {
            if (detail::trim(line).empty())
                continue;
            auto cells = detail::split(line, ',');
            if (cells.size() != header.size() + 1)
                throw Error(Errc::invalid_argument, "adjacency row has the wrong number of cells");
            std::vector<int> vals;
            for (std::size_t j = 1; j < cells.size(); ++j)
            {
                const auto cell = detail::trim(cells[j]);
                if (cell != "0" && cell != "1")
                    throw Error(Errc::invalid_argument, "adjacency entries must be 0 or 1");
                vals.push_back(cell == "1" ? 1 : 0);
            }
            rows[std::string(detail::trim(cells[0]))] = std::move(vals);
        }

        const auto n = static_cast<Eigen::Index>(assets.size());
        Eigen::MatrixXi a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const auto& name = assets[static_cast<std::size_t>(i)];
            const auto row = rows.find(name);
            if (row == rows.end() || !col.contains(name))
                throw Error(Errc::missing_column, "adjacency has no entry for asset " + name);
            for (Eigen::Index j = 0; j < n; ++j)
            {
                const auto other = col.find(assets[static_cast<std::size_t>(j)]);
                if (other == col.end())
                    throw Error(Errc::missing_column,
                                "adjacency has no entry for asset " + assets[static_cast<std::size_t>(j)]);
                a(i, j) = row->second[static_cast<std::size_t>(other->second)];
            }
        }
        return AdjacencyMatrix(a);
    }

    /// `asset,sector` lines (optional header) expanded to a block adjacency.
    inline AdjacencyMatrix read_sector_map(std::istream& in, const std::vector<std::string>& assets)
    {
        std::map<std::string, std::string> sector;
        std::string line;
        bool first = true;
        while (std::getline(in, line))
        {
            const auto t = detail::trim(line);
            if (t.empty() || t.front() == '#')
                continue;
            const auto cells = detail::split(t, ',');
            if (cells.size() != 2)
                throw Error(Errc::invalid_argument, "sector map lines need exactly asset,sector");
            const auto key = detail::trim(cells[0]);
            const auto val = detail::trim(cells[1]);
            if (first && key == "asset" && val == "sector")
            {
                first = false;
                continue;
            }
            first = false;
            sector[std::string(key)] = std::string(val);
        }
        std::vector<std::string> group;
        for (const auto& name : assets)
        {
            const auto it = sector.find(name);
            if (it == sector.end())
                throw Error(Errc::missing_column, "sector map has no entry for asset " + name);
            group.push_back(it->second);
        }
        return AdjacencyMatrix::blocks(group);
    }

} // namespace portrules
