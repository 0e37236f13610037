/**
 * @file error.hpp
 * @brief Error kinds raised by the portrules library.
 *
 * Every failure is reported as a portrules::Error carrying an Errc code.
 * Conditions that still produce a usable result (a zero-location limit, an
 * entropy bisection without a bracket) are returned as flags on the result
 * instead of being thrown.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace portrules
{

    enum class Errc
    {
        invalid_argument,
        io_error,
        missing_column,
        unparseable_date,
        empty_panel,
        insufficient_data,
        degenerate_data,
        degenerate_regression,
        non_convergence,
        no_feasible_root,
        infeasible_root,
        infeasible_domain,
        singular_covariance,
        block_too_large,
        singular_block,
        nonpositive_diagonal,
        nonpositive_variance,
        singular_precision,
        unknown_rule,
    };

    inline const char* to_string(Errc code) noexcept
    {
        switch (code)
        {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::io_error: return "IoError";
        case Errc::missing_column: return "MissingColumn";
        case Errc::unparseable_date: return "UnparseableDate";
        case Errc::empty_panel: return "EmptyPanel";
        case Errc::insufficient_data: return "InsufficientData";
        case Errc::degenerate_data: return "DegenerateData";
        case Errc::degenerate_regression: return "DegenerateRegression";
        case Errc::non_convergence: return "NonConvergence";
        case Errc::no_feasible_root: return "NoFeasibleRoot";
        case Errc::infeasible_root: return "InfeasibleRoot";
        case Errc::infeasible_domain: return "InfeasibleDomain";
        case Errc::singular_covariance: return "SingularCovariance";
        case Errc::block_too_large: return "BlockTooLarge";
        case Errc::singular_block: return "SingularBlock";
        case Errc::nonpositive_diagonal: return "NonpositiveDiagonal";
        case Errc::nonpositive_variance: return "NonpositiveVariance";
        case Errc::singular_precision: return "SingularPrecision";
        case Errc::unknown_rule: return "UnknownRule";
        }
        return "Unknown";
    }

    /// Input problems (bad files, bad parameters, too little data) as opposed
    /// to numerical failures of an otherwise valid problem.
    inline bool is_input_error(Errc code) noexcept
    {
        switch (code)
        {
        case Errc::invalid_argument:
        case Errc::io_error:
        case Errc::missing_column:
        case Errc::unparseable_date:
        case Errc::empty_panel:
        case Errc::insufficient_data:
        case Errc::degenerate_data:
        case Errc::block_too_large:
        case Errc::unknown_rule:
            return true;
        default:
            return false;
        }
    }

    class Error : public std::runtime_error
    {
    public:
        Error(Errc code, const std::string& what)
            : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
        {
        }

        Errc code() const noexcept { return code_; }

    private:
        Errc code_;
    };

    namespace detail
    {
        inline void require(bool condition, const char* what)
        {
            if (!condition)
                throw Error(Errc::invalid_argument, what);
        }
    } // namespace detail

} // namespace portrules
