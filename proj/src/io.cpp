#include "factts/io.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>

#include "factts/errors.hpp"

namespace factts::io {

namespace {

void put_u64(std::ostream& os, std::uint64_t u) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b;
    is.read(reinterpret_cast<char*>(b.data()), 8);
    if (!is) throw Error("unexpected end of binary stream");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return u;
}

}  // namespace

void write_f64_le(std::ostream& os, std::span<const double> values) {
    for (double v : values) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

void read_f64_le(std::istream& is, std::span<double> values) {
    for (double& v : values) v = std::bit_cast<double>(get_u64(is));
}

void write_u64_le(std::ostream& os, std::uint64_t v) { put_u64(os, v); }

std::uint64_t read_u64_le(std::istream& is) { return get_u64(is); }

}  // namespace factts::io
