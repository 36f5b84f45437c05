#pragma once
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace alloyloc::io {

inline constexpr const char* tool_name = "alloyloc";
inline constexpr const char* tool_version = "0.1.0";

/// Shortest round-trip decimal form; "nan", "inf" and "-inf" for non-finite values.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw NumericalError("could not format a floating-point value");
    return std::string(buf, end);
}

/// JSON has no encoding for non-finite numbers; they are written as strings.
inline nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

using Cell = std::variant<std::int64_t, std::uint64_t, double, bool, std::string>;

inline std::string cell_text(const Cell& c) {
    struct Visitor {
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(std::uint64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& v) const {
            if (v.find_first_of(",\"\n") == std::string::npos) return v;
            std::string out = "\"";
            for (char ch : v) {
                if (ch == '"') out += '"';
                out += ch;
            }
            return out + "\"";
        }
    };
    return std::visit(Visitor{}, c);
}

inline nlohmann::json cell_json(const Cell& c) {
    struct Visitor {
        nlohmann::json operator()(std::int64_t v) const { return v; }
        nlohmann::json operator()(std::uint64_t v) const { return v; }
        nlohmann::json operator()(double v) const { return number(v); }
        nlohmann::json operator()(bool v) const { return v; }
        nlohmann::json operator()(const std::string& v) const { return v; }
    };
    return std::visit(Visitor{}, c);
}

/// Long-format table: one header, rows of equal width.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw std::logic_error("table row width does not match its header");
        rows.push_back(std::move(row));
    }

    nlohmann::json to_json() const {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json o = nlohmann::json::object();
            for (std::size_t i = 0; i < columns.size(); ++i) o[columns[i]] = cell_json(r[i]);
            out.push_back(std::move(o));
        }
        return out;
    }
};

/// A finished run: resolved configuration, scalar results and a table.
struct Report {
    std::string subcommand;
    std::uint64_t master_seed = 0;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json results = nlohmann::json::object();
    Table table;
};

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ConfigError("unknown format '" + s + "' (expected csv or json)");
}

inline void write_json(std::ostream& os, const Report& r) {
    nlohmann::json j;
    j["tool"] = tool_name;
    j["version"] = tool_version;
    j["subcommand"] = r.subcommand;
    j["master_seed"] = r.master_seed;
    j["config"] = r.config;
    j["results"] = r.results;
    j["columns"] = r.table.columns;
    j["rows"] = r.table.to_json();
    os << j.dump(2) << '\n';
}

/// CSV preceded by '#' lines carrying the tool, version, seed, config and scalar results.
inline void write_csv(std::ostream& os, const Report& r) {
    os << "# tool=" << tool_name << " version=" << tool_version << " subcommand=" << r.subcommand
       << " master_seed=" << r.master_seed << '\n';
    os << "# config=" << r.config.dump() << '\n';
    os << "# results=" << r.results.dump() << '\n';
    for (std::size_t i = 0; i < r.table.columns.size(); ++i) os << (i ? "," : "") << r.table.columns[i];
    os << '\n';
    for (const auto& row : r.table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
}

inline void check_output_path(const std::string& path) {
    if (path.empty() || path == "-") return;
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent))
        throw ConfigError("output directory does not exist: " + parent.string());
}

inline void emit(const Report& r, Format f, const std::string& path) {
    const auto write = [&](std::ostream& os) { f == Format::csv ? write_csv(os, r) : write_json(os, r); };
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    check_output_path(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    write(out);
}

} // namespace alloyloc::io
