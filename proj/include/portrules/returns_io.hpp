/**
 * @file returns_io.hpp
 * @brief Price CSV ingestion and period return panels.
 *
 * Prices are read from a CSV whose first column holds ISO-8601 dates
 * (YYYY-MM-DD) and whose remaining columns hold close prices. Returns are
 * simple returns in percent, r_t = 100 * (P_t / P_{t-1} - 1), computed on the
 * last observation of each calendar bucket:
 *
 *     D  every trading date
 *     W  ISO week (Monday to Sunday)
 *     M  calendar month
 *
 * Missing or invalid prices are dropped per asset, so assets may have
 * different histories. Covariance estimation works on aligned() which keeps
 * only the dates where every asset has a return.
 */

#pragma once

#include "portrules/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace portrules
{

    using Date = std::chrono::year_month_day;

    enum class Period
    {
        daily,
        weekly,
        monthly
    };

    inline char period_code(Period p)
    {
        switch (p)
        {
        case Period::daily: return 'D';
        case Period::weekly: return 'W';
        case Period::monthly: return 'M';
        }
        return '?';
    }

    inline Period parse_period(std::string_view s)
    {
        if (s == "D" || s == "d")
            return Period::daily;
        if (s == "W" || s == "w")
            return Period::weekly;
        if (s == "M" || s == "m")
            return Period::monthly;
        throw Error(Errc::invalid_argument, "period must be one of D, W, M");
    }

    /// Trading days represented by one period, used as the horizon T in
    /// scaling-law regressions.
    inline double trading_days(Period p)
    {
        switch (p)
        {
        case Period::daily: return 1.0;
        case Period::weekly: return 5.0;
        case Period::monthly: return 21.0;
        }
        return 1.0;
    }

    inline std::string format_date(const Date& d)
    {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                      static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
        return buf;
    }

    namespace detail
    {
        inline std::string_view trim(std::string_view s)
        {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"' ||
                                  s.front() == '\r' || s.front() == '\xEF' || s.front() == '\xBB' ||
                                  s.front() == '\xBF'))
                s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' ||
                                  s.back() == '\r' || s.back() == '\n'))
                s.remove_suffix(1);
            return s;
        }

        inline std::vector<std::string_view> split(std::string_view line, char delim)
        {
            std::vector<std::string_view> out;
            std::size_t start = 0;
            while (true)
            {
                const auto pos = line.find(delim, start);
                if (pos == std::string_view::npos)
                {
                    out.push_back(trim(line.substr(start)));
                    break;
                }
                out.push_back(trim(line.substr(start, pos - start)));
                start = pos + 1;
            }
            return out;
        }

        inline bool parse_double(std::string_view s, double& out)
        {
            s = trim(s);
            if (s.empty())
                return false;
            if (s.front() == '+')
                s.remove_prefix(1);
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            return ec == std::errc() && ptr == s.data() + s.size();
        }

        inline bool parse_date(std::string_view s, Date& out)
        {
            s = trim(s);
            if (s.size() < 10 || s[4] != '-' || s[7] != '-')
                return false;
            // A trailing time component ("2020-01-02T00:00:00") is ignored.
            if (s.size() > 10 && s[10] != 'T' && s[10] != ' ')
                return false;
            int y = 0;
            unsigned m = 0, d = 0;
            auto r1 = std::from_chars(s.data(), s.data() + 4, y);
            auto r2 = std::from_chars(s.data() + 5, s.data() + 7, m);
            auto r3 = std::from_chars(s.data() + 8, s.data() + 10, d);
            if (r1.ec != std::errc() || r1.ptr != s.data() + 4 || r2.ec != std::errc() ||
                r2.ptr != s.data() + 7 || r3.ec != std::errc() || r3.ptr != s.data() + 10)
                return false;
            out = Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
            return out.ok();
        }

        inline long days_since_epoch(const Date& d)
        {
            return std::chrono::sys_days{d}.time_since_epoch().count();
        }

        inline long floor_div(long a, long b)
        {
            long q = a / b;
            if ((a % b != 0) && ((a < 0) != (b < 0)))
                --q;
            return q;
        }

        /// Calendar bucket identity of a date for the given period.
        inline long bucket_key(const Date& d, Period p)
        {
            switch (p)
            {
            case Period::daily: return days_since_epoch(d);
            // 1970-01-01 was a Thursday, so day + 3 puts Mondays on multiples of 7.
            case Period::weekly: return floor_div(days_since_epoch(d) + 3, 7);
            case Period::monthly:
                return static_cast<long>(static_cast<int>(d.year())) * 12 +
                       static_cast<long>(static_cast<unsigned>(d.month())) - 1;
            }
            return 0;
        }
    } // namespace detail

    /// Column mapping for load_csv. Empty fields select the defaults: the first
    /// column is the date and every other column is a price series.
    struct CsvSchema
    {
        std::string date_column;
        std::vector<std::string> price_columns;
        char delimiter = ',';
    };

    /// Close prices, rows = dates, cols = assets. Missing cells are NaN.
    struct PricePanel
    {
        std::vector<Date> dates;
        std::vector<std::string> assets;
        Eigen::MatrixXd prices;
        std::vector<std::size_t> dropped; ///< invalid cells per asset

        std::size_t dropped_total() const
        {
            return std::accumulate(dropped.begin(), dropped.end(), std::size_t{0});
        }

        std::size_t valid_count(std::size_t asset) const
        {
            std::size_t n = 0;
            for (Eigen::Index r = 0; r < prices.rows(); ++r)
                n += std::isfinite(prices(r, static_cast<Eigen::Index>(asset))) ? 1 : 0;
            return n;
        }
    };

    inline PricePanel parse_csv(std::istream& in, const CsvSchema& schema = {})
    {
        std::string line;
        std::vector<std::string> header;
        while (std::getline(in, line))
        {
            if (!detail::trim(line).empty())
                break;
        }
        if (detail::trim(line).empty())
            throw Error(Errc::empty_panel, "no header row");
        for (auto f : detail::split(line, schema.delimiter))
            header.emplace_back(f);

        std::size_t date_col = 0;
        if (!schema.date_column.empty())
        {
            auto it = std::find(header.begin(), header.end(), schema.date_column);
            if (it == header.end())
                throw Error(Errc::missing_column, "date column '" + schema.date_column + "' not found");
            date_col = static_cast<std::size_t>(it - header.begin());
        }
        std::vector<std::size_t> price_cols;
        if (schema.price_columns.empty())
        {
            for (std::size_t c = 0; c < header.size(); ++c)
                if (c != date_col && !header[c].empty())
                    price_cols.push_back(c);
        }
        else
        {
            for (const auto& name : schema.price_columns)
            {
                auto it = std::find(header.begin(), header.end(), name);
                if (it == header.end())
                    throw Error(Errc::missing_column, "price column '" + name + "' not found");
                price_cols.push_back(static_cast<std::size_t>(it - header.begin()));
            }
        }
        if (price_cols.empty())
            throw Error(Errc::missing_column, "no price columns");

        struct Row
        {
            Date date;
            std::vector<double> values;
        };
        std::vector<Row> rows;
        std::vector<std::size_t> dropped(price_cols.size(), 0);
        std::size_t line_no = 1;
        while (std::getline(in, line))
        {
            ++line_no;
            if (detail::trim(line).empty())
                continue;
            const auto fields = detail::split(line, schema.delimiter);
            Row row;
            if (date_col >= fields.size() || !detail::parse_date(fields[date_col], row.date))
                throw Error(Errc::unparseable_date,
                            "line " + std::to_string(line_no) + ": '" +
                                std::string(date_col < fields.size() ? fields[date_col] : "") + "'");
            row.values.resize(price_cols.size());
            for (std::size_t k = 0; k < price_cols.size(); ++k)
            {
                double v = 0.0;
                const bool ok = price_cols[k] < fields.size() && detail::parse_double(fields[price_cols[k]], v) &&
                                std::isfinite(v) && v > 0.0;
                if (!ok)
                {
                    v = std::numeric_limits<double>::quiet_NaN();
                    ++dropped[k];
                }
                row.values[k] = v;
            }
            const bool any_valid = std::any_of(row.values.begin(), row.values.end(),
                                               [](double v) { return std::isfinite(v); });
            if (any_valid)
                rows.push_back(std::move(row));
        }
        if (rows.empty())
            throw Error(Errc::empty_panel, "no rows with a valid price");

        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].date == rows[i - 1].date)
                throw Error(Errc::invalid_argument, "duplicate date " + format_date(rows[i].date));

        PricePanel panel;
        for (auto c : price_cols)
            panel.assets.push_back(header[c]);
        panel.dropped = std::move(dropped);
        panel.prices.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(price_cols.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
        {
            panel.dates.push_back(rows[r].date);
            for (std::size_t k = 0; k < price_cols.size(); ++k)
                panel.prices(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r].values[k];
        }
        return panel;
    }

    inline PricePanel load_csv(const std::string& path, const CsvSchema& schema = {})
    {
        std::ifstream in(path);
        if (!in)
            throw Error(Errc::io_error, "cannot open '" + path + "'");
        return parse_csv(in, schema);
    }

    /// Percent returns per period. Rows are calendar buckets; a cell is NaN
    /// when the asset has no return closing in that bucket.
    struct ReturnPanel
    {
        Period period = Period::daily;
        std::vector<Date> dates; ///< latest panel date inside each bucket
        std::vector<std::string> assets;
        Eigen::MatrixXd returns;

        std::size_t asset_count() const { return assets.size(); }

        /// Valid returns of one asset in date order.
        std::vector<double> series(std::size_t asset) const
        {
            std::vector<double> out;
            const auto col = static_cast<Eigen::Index>(asset);
            for (Eigen::Index r = 0; r < returns.rows(); ++r)
                if (std::isfinite(returns(r, col)))
                    out.push_back(returns(r, col));
            return out;
        }

        /// Rows where every asset has a return (date intersection).
        Eigen::MatrixXd aligned() const
        {
            std::vector<Eigen::Index> keep;
            for (Eigen::Index r = 0; r < returns.rows(); ++r)
                if (returns.row(r).allFinite())
                    keep.push_back(r);
            Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), returns.cols());
            for (std::size_t i = 0; i < keep.size(); ++i)
                out.row(static_cast<Eigen::Index>(i)) = returns.row(keep[i]);
            return out;
        }

        /// Panel over synthetic data: one row per observation, assets named
        /// A0, A1, ... unless given.
        static ReturnPanel from_matrix(const Eigen::MatrixXd& data, std::vector<std::string> names = {},
                                       Period period = Period::daily)
        {
            ReturnPanel p;
            p.period = period;
            p.returns = data;
            if (names.empty())
                for (Eigen::Index c = 0; c < data.cols(); ++c)
                    names.push_back("A" + std::to_string(c));
            p.assets = std::move(names);
            const Date origin{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};
            for (Eigen::Index r = 0; r < data.rows(); ++r)
                p.dates.push_back(Date{std::chrono::sys_days{origin} + std::chrono::days{r}});
            return p;
        }
    };

    inline ReturnPanel to_returns(const PricePanel& panel, Period period)
    {
        const auto n_assets = static_cast<Eigen::Index>(panel.assets.size());
        if (panel.dates.empty() || n_assets == 0)
            throw Error(Errc::insufficient_data, "empty price panel");

        // Bucket index per panel row; panel dates are sorted so buckets are too.
        std::vector<long> keys;
        std::vector<std::size_t> bucket_of(panel.dates.size());
        std::vector<Date> bucket_date;
        for (std::size_t r = 0; r < panel.dates.size(); ++r)
        {
            const long k = detail::bucket_key(panel.dates[r], period);
            if (keys.empty() || keys.back() != k)
            {
                keys.push_back(k);
                bucket_date.push_back(panel.dates[r]);
            }
            bucket_date.back() = panel.dates[r];
            bucket_of[r] = keys.size() - 1;
        }
        const auto n_buckets = static_cast<Eigen::Index>(keys.size());
        const double nan = std::numeric_limits<double>::quiet_NaN();

        Eigen::MatrixXd closes = Eigen::MatrixXd::Constant(n_buckets, n_assets, nan);
        for (std::size_t r = 0; r < panel.dates.size(); ++r)
            for (Eigen::Index c = 0; c < n_assets; ++c)
            {
                const double v = panel.prices(static_cast<Eigen::Index>(r), c);
                if (std::isfinite(v))
                    closes(static_cast<Eigen::Index>(bucket_of[r]), c) = v;
            }

        Eigen::MatrixXd rets = Eigen::MatrixXd::Constant(n_buckets, n_assets, nan);
        for (Eigen::Index c = 0; c < n_assets; ++c)
        {
            double prev = nan;
            Eigen::Index count = 0;
            for (Eigen::Index b = 0; b < n_buckets; ++b)
            {
                const double v = closes(b, c);
                if (!std::isfinite(v))
                    continue;
                ++count;
                if (std::isfinite(prev))
                    rets(b, c) = 100.0 * (v / prev - 1.0);
                prev = v;
            }
            if (count < 2)
                throw Error(Errc::insufficient_data,
                            "asset '" + panel.assets[static_cast<std::size_t>(c)] +
                                "' has fewer than two prices at period " + period_code(period));
        }

        ReturnPanel out;
        out.period = period;
        out.assets = panel.assets;
        std::vector<Eigen::Index> keep;
        for (Eigen::Index b = 0; b < n_buckets; ++b)
            if (rets.row(b).unaryExpr([](double v) { return std::isfinite(v) ? 1.0 : 0.0; }).sum() > 0)
                keep.push_back(b);
        out.returns.resize(static_cast<Eigen::Index>(keep.size()), n_assets);
        for (std::size_t i = 0; i < keep.size(); ++i)
        {
            out.returns.row(static_cast<Eigen::Index>(i)) = rets.row(keep[i]);
            out.dates.push_back(bucket_date[static_cast<std::size_t>(keep[i])]);
        }
        return out;
    }

} // namespace portrules
