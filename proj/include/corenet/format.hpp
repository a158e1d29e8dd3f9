#ifndef CORENET_FORMAT_HPP
#define CORENET_FORMAT_HPP

#include <cstdio>
#include <cstdlib>
#include <string>

namespace corenet {

// Shortest decimal string that round-trips the exact double. Keeps CSV and
// SVG output readable while staying bit-faithful and deterministic.
inline std::string format_double(double v) {
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

}  // namespace corenet

#endif  // CORENET_FORMAT_HPP
