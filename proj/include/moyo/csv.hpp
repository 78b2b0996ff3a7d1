#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace moyo {

// Deterministic CSV writing: '.' decimal point, ',' separator, LF line
// endings, headers always present, doubles rendered with %.17g so that
// equal numbers produce equal bytes on every platform we target.
class CsvWriter {
  public:
    using Cell = std::variant<std::string, double, long long>;

    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> cells) {
        if (cells.size() != header_.size())
            throw ConfigError("csv row width does not match header");
        rows_.push_back(std::move(cells));
    }

    static std::string format(const Cell& c) {
        if (std::holds_alternative<std::string>(c)) return escape(std::get<std::string>(c));
        if (std::holds_alternative<long long>(c))
            return std::to_string(std::get<long long>(c));
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
        return buf;
    }

    std::string to_string() const {
        std::ostringstream out;
        for (std::size_t j = 0; j < header_.size(); ++j)
            out << (j ? "," : "") << escape(header_[j]);
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format(row[j]);
            out << '\n';
        }
        return out.str();
    }

    void write_file(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);  // binary: keep LF on all platforms
        if (!f) throw ConfigError("cannot open output file: " + path);
        f << to_string();
        if (!f) throw ConfigError("failed writing output file: " + path);
    }

  private:
    static std::string escape(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char ch : s) {
            if (ch == '"') out += '"';
            out += ch;
        }
        out += '"';
        return out;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

}  // namespace moyo
