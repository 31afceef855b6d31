#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace dtisac {

/// Shortest round-trip decimal form; "nan", "inf" and "-inf" for
/// non-finite values.
std::string format_double(double v);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    /// Index of a column; throws std::out_of_range if absent.
    std::size_t column(const std::string& name) const;
    /// Numeric view of a cell (integers widen, strings throw).
    double number(std::size_t row, const std::string& name) const;

    std::string to_csv() const;
    /// Array of objects keyed by column name. Non-finite numbers become null.
    std::string to_json() const;
};

}  // namespace dtisac
