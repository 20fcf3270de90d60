#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <iosfwd>
#include <span>
#include <string>

namespace factts::io {

// Binary payloads are 64-bit little-endian IEEE doubles, independent of host
// byte order, so that files written by one machine read back bit-exactly on
// another.

void write_f64_le(std::ostream& os, std::span<const double> values);
void read_f64_le(std::istream& is, std::span<double> values);
void write_u64_le(std::ostream& os, std::uint64_t v);
std::uint64_t read_u64_le(std::istream& is);

// Shortest-round-trip-safe textual form of a double. All machine-readable
// CSV output goes through this so reruns are byte-identical.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace factts::io
