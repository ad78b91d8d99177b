#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace vstr {

// Error categories. Numeric values are part of the C API contract
// (see include/vstr.h) and must not be reordered.
enum class errc : int {
    invalid_argument = 1,
    io = 2,
    format = 3,
    state = 4,
    not_found = 5,
    unindexable = 6,
};

class error : public std::runtime_error {
public:
    error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

// ---------------------------------------------------------------------------
// Deterministic random source. All randomness in the library flows through
// this class so that a fixed seed reproduces every artifact bit for bit.
// Distribution code is hand-rolled: std:: distributions are not pinned by
// the standard and would tie outputs to a particular libstdc++.
// ---------------------------------------------------------------------------
class rng {
public:
    explicit rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return state_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(state_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) fail(errc::invalid_argument, "rng::below: n must be positive");
        std::uint64_t bound = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = state_();
        } while (x >= bound);
        return x % n;
    }

    // Standard normal via Box-Muller; caches the second deviate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Partial Fisher-Yates: m distinct indices drawn from [0, n).
    std::vector<std::uint32_t> sample_indices(std::uint32_t n, std::uint32_t m) {
        if (m > n) fail(errc::invalid_argument, "sample_indices: m exceeds population");
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        for (std::uint32_t i = 0; i < m; ++i) {
            std::uint32_t j = i + static_cast<std::uint32_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        return pool;
    }

private:
    std::mt19937_64 state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Little-endian binary IO with LEB128 varints. Shared by every on-disk
// format the library defines.
// ---------------------------------------------------------------------------
class binary_writer {
public:
    explicit binary_writer(const std::filesystem::path& path)
        : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
        if (!out_) fail(errc::io, "cannot open for writing: " + path_);
    }

    void u8(std::uint8_t v) { raw(&v, 1); }

    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        raw(b, 4);
    }

    void u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        raw(b, 8);
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            u8(static_cast<std::uint8_t>(v) | 0x80);
            v >>= 7;
        }
        u8(static_cast<std::uint8_t>(v));
    }

    void magic(const char tag[4]) { raw(tag, 4); }

    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    void raw(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!out_) fail(errc::io, "write failed: " + path_);
        written_ += n;
    }

    std::uint64_t tell() const { return written_; }

    void close() {
        out_.close();
        if (out_.fail()) fail(errc::io, "close failed: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
    std::uint64_t written_ = 0;
};

class binary_reader {
public:
    explicit binary_reader(const std::filesystem::path& path)
        : in_(path, std::ios::binary), path_(path.string()) {
        if (!in_) fail(errc::io, "cannot open for reading: " + path_);
    }

    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }

    std::uint32_t u32() {
        std::uint8_t b[4];
        raw(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        std::uint8_t b[8];
        raw(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    std::uint64_t varint() {
        std::uint64_t v = 0;
        int shift = 0;
        while (true) {
            std::uint8_t b = u8();
            if (shift >= 64) fail(errc::format, "varint overflow: " + path_);
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) break;
            shift += 7;
        }
        return v;
    }

    void expect_magic(const char tag[4], const std::string& what) {
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, tag, 4) != 0)
            fail(errc::format, "not a " + what + " file: " + path_);
    }

    std::string str() {
        std::uint32_t n = u32();
        if (n > max_string_) fail(errc::format, "unreasonable string length in " + path_);
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

    void raw(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            fail(errc::format, "truncated file: " + path_);
        consumed_ += n;
    }

    std::uint64_t tell() const { return consumed_; }

    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

private:
    static constexpr std::uint32_t max_string_ = 1u << 24;
    std::ifstream in_;
    std::string path_;
    std::uint64_t consumed_ = 0;
};

// snprintf wrapper; keeps numeric formatting in one place (no std::format
// on this toolchain).
template <typename... Args>
std::string strfmt(const char* fmt, Args... args) {
    int n = std::snprintf(nullptr, 0, fmt, args...);
    std::string s(static_cast<std::size_t>(n), '\0');
    std::snprintf(s.data(), s.size() + 1, fmt, args...);
    return s;
}

} // namespace vstr
