#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace twomode::cli {

/// Comma-separated table with '#' header lines. Reals are written with
/// `precision` significant digits ("nan" for NaN).
class Table {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit Table(int precision = 17) : precision_(precision) {}

    void meta(const std::string& line) { meta_.push_back(line); }
    void columns(std::vector<std::string> names) { columns_ = std::move(names); }
    void row(std::vector<Cell> cells) { rows_.push_back(std::move(cells)); }
    std::size_t rows() const noexcept { return rows_.size(); }

    std::string format(double x) const
    {
        if (std::isnan(x)) {
            return "nan";
        }
        if (std::isinf(x)) {
            return x > 0 ? "inf" : "-inf";
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", precision_, x);
        return buf;
    }

    void write(std::ostream& os) const
    {
        for (const auto& m : meta_) {
            os << "# " << m << '\n';
        }
        write_line(os, columns_);
        for (const auto& r : rows_) {
            std::vector<std::string> cells;
            cells.reserve(r.size());
            for (const auto& c : r) {
                if (const double* d = std::get_if<double>(&c)) {
                    cells.push_back(format(*d));
                } else if (const long long* i = std::get_if<long long>(&c)) {
                    cells.push_back(std::to_string(*i));
                } else {
                    cells.push_back(std::get<std::string>(c));
                }
            }
            write_line(os, cells);
        }
    }

private:
    static void write_line(std::ostream& os, const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            os << (i ? "," : "") << cells[i];
        }
        os << '\n';
    }

    int precision_;
    std::vector<std::string> meta_;
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace twomode::cli
