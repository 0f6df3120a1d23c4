#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "clcp/core/error.hpp"
#include "clcp/core/tensor.hpp"

// CTNS container:
//   "CTNS" | u16 version | u32 rank | u64 dims[rank] | u8 precision | payload
// All integers little-endian. The payload is row-major over dims with each
// complex entry stored as interleaved (real, imag) IEEE floats of the declared
// precision.

namespace clcp::io {

inline constexpr std::array<char, 4> ctns_magic{'C', 'T', 'N', 'S'};
inline constexpr std::uint16_t ctns_version = 1;

enum class Precision : std::uint8_t { f32 = 0, f64 = 1 };

struct CtnsHeader {
    std::uint16_t version{ctns_version};
    Shape dims;
    Precision precision{Precision::f32};
};

namespace detail {

template <class T>
T byteswap_if_big(T value) noexcept {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return value;
    }
}

template <class T>
void put(std::ostream& out, T value) {
    const T le = byteswap_if_big(value);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw Error(ErrorCode::format, "ctns: truncated header");
    return byteswap_if_big(value);
}

template <class Scalar>
void put_block(std::ostream& out, std::vector<Scalar>& block) {
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : block) v = byteswap_if_big(v);
    }
    out.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(Scalar)));
}

}  // namespace detail

inline void write_ctns_header(std::ostream& out, const CtnsHeader& header) {
    out.write(ctns_magic.data(), ctns_magic.size());
    detail::put<std::uint16_t>(out, header.version);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(header.dims.size()));
    for (const auto d : header.dims) detail::put<std::uint64_t>(out, d);
    detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(header.precision));
}

[[nodiscard]] inline CtnsHeader read_ctns_header(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != ctns_magic) throw Error(ErrorCode::format, "ctns: bad magic bytes");
    CtnsHeader header;
    header.version = detail::get<std::uint16_t>(in);
    if (header.version != ctns_version) {
        throw Error(ErrorCode::format, "ctns: unsupported version " + std::to_string(header.version));
    }
    const auto rank = detail::get<std::uint32_t>(in);
    if (rank > 16) throw Error(ErrorCode::format, "ctns: implausible rank " + std::to_string(rank));
    header.dims.resize(rank);
    for (auto& d : header.dims) d = static_cast<std::size_t>(detail::get<std::uint64_t>(in));
    const auto precision = detail::get<std::uint8_t>(in);
    if (precision > 1) throw Error(ErrorCode::format, "ctns: unknown precision flag");
    header.precision = static_cast<Precision>(precision);
    return header;
}

/// Writes interleaved (re, im) values of `values` in the requested precision.
template <std::floating_point Real>
void write_ctns_payload(std::ostream& out, std::span<const std::complex<Real>> values, Precision precision) {
    constexpr std::size_t chunk = 1U << 16U;
    for (std::size_t start = 0; start < values.size(); start += chunk) {
        const std::size_t n = std::min(chunk, values.size() - start);
        if (precision == Precision::f32) {
            std::vector<float> block(2 * n);
            for (std::size_t i = 0; i < n; ++i) {
                block[2 * i] = static_cast<float>(values[start + i].real());
                block[2 * i + 1] = static_cast<float>(values[start + i].imag());
            }
            detail::put_block(out, block);
        } else {
            std::vector<double> block(2 * n);
            for (std::size_t i = 0; i < n; ++i) {
                block[2 * i] = static_cast<double>(values[start + i].real());
                block[2 * i + 1] = static_cast<double>(values[start + i].imag());
            }
            detail::put_block(out, block);
        }
    }
}

template <std::floating_point Real>
void read_ctns_payload(std::istream& in, std::span<std::complex<Real>> values, Precision precision) {
    constexpr std::size_t chunk = 1U << 16U;
    auto read_block = [&](auto& block) {
        in.read(reinterpret_cast<char*>(block.data()),
                static_cast<std::streamsize>(block.size() * sizeof(typename std::decay_t<decltype(block)>::value_type)));
        if (!in) throw Error(ErrorCode::format, "ctns: truncated payload");
        if constexpr (std::endian::native == std::endian::big) {
            for (auto& v : block) v = detail::byteswap_if_big(v);
        }
    };
    for (std::size_t start = 0; start < values.size(); start += chunk) {
        const std::size_t n = std::min(chunk, values.size() - start);
        if (precision == Precision::f32) {
            std::vector<float> block(2 * n);
            read_block(block);
            for (std::size_t i = 0; i < n; ++i) {
                values[start + i] = {static_cast<Real>(block[2 * i]), static_cast<Real>(block[2 * i + 1])};
            }
        } else {
            std::vector<double> block(2 * n);
            read_block(block);
            for (std::size_t i = 0; i < n; ++i) {
                values[start + i] = {static_cast<Real>(block[2 * i]), static_cast<Real>(block[2 * i + 1])};
            }
        }
    }
}

template <std::floating_point Real>
void write_ctns(const std::filesystem::path& path, const BasicComplexTensor<Real>& tensor, Precision precision) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    write_ctns_header(out, CtnsHeader{ctns_version, tensor.shape(), precision});
    write_ctns_payload<Real>(out, tensor.data(), precision);
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

template <std::floating_point Real>
[[nodiscard]] BasicComplexTensor<Real> read_ctns(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    const auto header = read_ctns_header(in);
    BasicComplexTensor<Real> tensor(header.dims);
    read_ctns_payload<Real>(in, tensor.data(), header.precision);
    if (!tensor.all_finite()) throw Error(ErrorCode::format, "ctns: non-finite payload in " + path.string());
    return tensor;
}

}  // namespace clcp::io
