#include "dtisac/output.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace dtisac {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::size_t Table::column(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    throw std::out_of_range("table has no column '" + name + "'");
}

double Table::number(std::size_t row, const std::string& name) const
{
    const Cell& c = rows.at(row).at(column(name));
    if (const auto* d = std::get_if<double>(&c))
        return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c))
        return static_cast<double>(*i);
    throw std::invalid_argument("column '" + name + "' is not numeric");
}

namespace {

std::string csv_field(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c))
        return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c))
        return std::to_string(*i);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"')
            q += '"';
        q += ch;
    }
    return q + "\"";
}

}  // namespace

std::string Table::to_csv() const
{
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i)
        out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + csv_field(row[i]);
        out += "\n";
    }
    return out;
}

std::string Table::to_json() const
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size() && i < columns.size(); ++i) {
            const Cell& c = row[i];
            if (const auto* d = std::get_if<double>(&c))
                obj[columns[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
            else if (const auto* n = std::get_if<std::int64_t>(&c))
                obj[columns[i]] = *n;
            else
                obj[columns[i]] = std::get<std::string>(c);
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2);
}

}  // namespace dtisac
