#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

// Small CSV emitter: comma-separated, CRLF line ends, '.' decimal separator,
// doubles at full round-trip precision (%.17g) so identical runs produce
// byte-identical files.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot open " + path + " for writing");
    }

    void header(const std::vector<std::string>& names) { write_strings(names); }

    void row(const std::vector<double>& values) {
        std::string line;
        char buf[32];
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ',';
            std::snprintf(buf, sizeof buf, "%.17g", values[i]);
            line += buf;
        }
        line += "\r\n";
        out_ << line;
    }

    void row_mixed(const std::vector<std::string>& cells) { write_strings(cells); }

    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

  private:
    void write_strings(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        line += "\r\n";
        out_ << line;
    }

    std::ofstream out_;
};

}  // namespace mfg
