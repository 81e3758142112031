#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "asiplab/common.hpp"

namespace asiplab {

// 17 significant digits: doubles round-trip and output is byte-stable.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct Cell {
    std::string text;
    Cell(const char* s) : text(s) {}
    Cell(const std::string& s) : text(s) {}
    Cell(double v) : text(fmt17(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long v) : text(std::to_string(v)) {}
    Cell(unsigned long v) : text(std::to_string(v)) {}
    Cell(unsigned long long v) : text(std::to_string(v)) {}
    Cell(bool v) : text(v ? "1" : "0") {}
};

// Comma-separated UTF-8 with '#'-prefixed metadata lines before the header.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw ConfigError("cannot open output file: " + path);
    }

    void meta(const std::string& key, const Cell& value) {
        out_ << "# " << key << "=" << value.text << "\n";
    }

    void header(const std::vector<std::string>& cols) { write_line(cols); }

    void row(const std::vector<Cell>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i].text;
        }
        out_ << '\n';
    }

  private:
    void write_line(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out_ << ',';
            out_ << cols[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
};

}  // namespace asiplab
