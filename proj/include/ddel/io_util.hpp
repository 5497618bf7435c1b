#pragma once

#include <cstdio>
#include <string>

namespace ddel {

/// Shortest text form that round-trips a double exactly (17 significant digits).
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Write a whole file atomically: stage to a sibling temp file, then rename over the
/// target so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

/// Read a whole file; throws std::runtime_error naming the path on failure.
std::string read_text(const std::string& path);

}  // namespace ddel
