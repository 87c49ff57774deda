#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "fairsage/errors.hpp"

// Little-endian primitives for the on-disk graph and checkpoint formats.
namespace fairsage::binio {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("unexpected end of binary stream");
    return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
           std::uint32_t{b[3]} << 24;
}

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DataError("unexpected end of binary stream");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
}

inline double get_f64(std::istream& in) {
    std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

template <typename T>
concept WordType = std::same_as<T, std::uint32_t> || std::same_as<T, std::uint64_t> ||
                   std::same_as<T, double>;

template <WordType T>
void put_array(std::ostream& out, const T* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if constexpr (std::same_as<T, std::uint32_t>) put_u32(out, data[i]);
            else if constexpr (std::same_as<T, std::uint64_t>) put_u64(out, data[i]);
            else put_f64(out, data[i]);
        }
    }
}

template <WordType T>
void get_array(std::istream& in, T* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
        if (!in) throw DataError("unexpected end of binary stream");
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if constexpr (std::same_as<T, std::uint32_t>) data[i] = get_u32(in);
            else if constexpr (std::same_as<T, std::uint64_t>) data[i] = get_u64(in);
            else data[i] = get_f64(in);
        }
    }
}

}  // namespace fairsage::binio
