#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nilm/error.hpp"

namespace nilm {

/// Parsed CSV with string cells. Use read_numeric_csv for large all-numeric files.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            std::size_t end = i;
            // tolerate \r\n files
            if (end > start && line[end - 1] == '\r') --end;
            out.emplace_back(line.substr(start, end - start));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double_cell(const std::string& cell, const std::string& path, std::size_t line_no) {
    const char* begin = cell.c_str();
    char* endp = nullptr;
    double v = std::strtod(begin, &endp);
    if (endp == begin || (endp && *endp != '\0')) {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
    }
    return v;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) throw ValidationError(path + ": empty file");
    t.header = detail::split_csv_line(line);
    while (std::getline(f, line)) {
        if (line.empty() || line == "\r") continue;
        t.rows.push_back(detail::split_csv_line(line));
        if (t.rows.back().size() != t.header.size()) {
            throw ValidationError(path + ":" + std::to_string(t.rows.size() + 1) +
                                  ": expected " + std::to_string(t.header.size()) + " columns, got " +
                                  std::to_string(t.rows.back().size()));
        }
    }
    return t;
}

struct NumericCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline NumericCsv read_numeric_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path);
    NumericCsv t;
    std::string line;
    if (!std::getline(f, line)) throw ValidationError(path + ": empty file");
    t.header = detail::split_csv_line(line);
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != t.header.size()) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header.size()) + " columns, got " +
                                  std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) row[i] = detail::parse_double_cell(cells[i], path, line_no);
        t.rows.push_back(std::move(row));
    }
    return t;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : f_(path) {
        if (!f_) throw Error("cannot write " + path);
        // float payloads round-trip exactly; unix-second timestamps keep
        // millisecond resolution
        f_.precision(12);
    }

    void header(const std::vector<std::string>& names) { write_cells(names); }

    template <typename T>
    void row(const std::vector<T>& values) {
        bool first = true;
        for (const T& v : values) {
            if (!first) f_ << ',';
            first = false;
            f_ << v;
        }
        f_ << '\n';
    }

private:
    void write_cells(const std::vector<std::string>& cells) {
        bool first = true;
        for (const std::string& c : cells) {
            if (!first) f_ << ',';
            first = false;
            f_ << c;
        }
        f_ << '\n';
    }

    std::ofstream f_;
};

}  // namespace nilm
