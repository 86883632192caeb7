#pragma once
#include <charconv>
#include <cstdio>
#include <string>
#include <vector>

namespace wcgl {

// Shortest round-trip decimal form, locale-independent. Identical inputs give
// identical bytes, which is what the reproducibility contract for CSV output
// rests on.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct CsvWriter {
    std::string text;

    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) text += ',';
            text += names[i];
        }
        text += '\n';
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) text += ',';
            text += fmt_double(values[i]);
        }
        text += '\n';
    }
};

} // namespace wcgl
