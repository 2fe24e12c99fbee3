#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace iblab {

// CSV writer with fixed "%.17g" float formatting so identical values emit
// identical bytes.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }

    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) out_ << ',';
            out_ << names[i];
        }
        out_ << '\n';
    }

    CsvWriter& field(double v) {
        sep();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out_ << buf;
        return *this;
    }

    CsvWriter& field(long long v) {
        sep();
        out_ << v;
        return *this;
    }

    CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(std::size_t v) { return field(static_cast<long long>(v)); }

    CsvWriter& field(const std::string& v) {
        sep();
        out_ << v;
        return *this;
    }

    void endrow() {
        out_ << '\n';
        first_ = true;
    }

  private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }

    std::ofstream out_;
    bool first_ = true;
};

// Minimal reader: splits rows on commas, no quoting (none of our files use it).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace iblab
