#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "codec.hpp"
#include "common.hpp"
#include "vlad.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("vstr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<float> random_values(vstr::rng& rand, std::size_t n, double lo = -1.0,
                                        double hi = 1.0) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rand.uniform(lo, hi));
    return v;
}

// A raw (unnormalized) vector wrapped as a VLAD with the given block shape.
inline vstr::VladVector make_vlad(std::string id, std::size_t blocks, std::size_t block_dim,
                                  std::vector<float> values) {
    vstr::VladVector v;
    v.image_id = std::move(id);
    v.block_count = blocks;
    v.block_dim = block_dim;
    v.values = std::move(values);
    v.zero_flags.assign(blocks, 0);
    return v;
}

inline vstr::VladVector random_vlad(vstr::rng& rand, std::string id, std::size_t blocks,
                                    std::size_t block_dim) {
    return make_vlad(std::move(id), blocks, block_dim, random_values(rand, blocks * block_dim));
}

// Zeroes the chosen blocks and marks their flags, like an image whose
// descriptors never touched those codewords.
inline void zero_out_blocks(vstr::VladVector& v, const std::vector<std::uint32_t>& blocks) {
    for (auto b : blocks) {
        v.zero_flags[b] = 1;
        for (std::size_t j = 0; j < v.block_dim; ++j) v.values[b * v.block_dim + j] = 0.0f;
    }
}

// Reference set built directly from given vectors (bypasses sampling).
inline vstr::ReferenceSet make_refs(vstr::RefMode mode, std::size_t dim,
                                    const std::vector<std::vector<float>>& refs) {
    vstr::ReferenceSet rs;
    rs.mode = mode;
    rs.dim = dim;
    for (const auto& r : refs) rs.refs.insert(rs.refs.end(), r.begin(), r.end());
    return rs;
}

inline vstr::ReferenceSet random_refs(vstr::rng& rand, vstr::RefMode mode, std::size_t dim,
                                      std::size_t m) {
    vstr::ReferenceSet rs;
    rs.mode = mode;
    rs.dim = dim;
    rs.refs = random_values(rand, m * dim);
    return rs;
}

// Five 2-D references A..E (= r1..r5) and three objects laid out so that the
// nearest-reference orders are:  o1: E,B,A,...   o2: D,C,E,...   q: E,A,...
// With k_x=3 / k_q=2 the encodings come out as o1={r5:3,r2:2,r1:1},
// o2={r4:3,r3:2,r5:1}, q={r5:2,r1:1}, giving dot products 7 and 2.
struct WorkedExample {
    vstr::ReferenceSet refs;
    vstr::VladVector o1, o2, q;
};

inline WorkedExample worked_example() {
    WorkedExample w;
    w.refs = make_refs(vstr::RefMode::whole, 2,
                       {{0.0f, 0.0f},   // A
                        {1.2f, 1.2f},   // B
                        {3.0f, 2.0f},   // C
                        {4.0f, 2.0f},   // D
                        {2.0f, 0.0f}}); // E
    w.o1 = make_vlad("o1", 1, 2, {1.9f, 0.3f});
    w.o2 = make_vlad("o2", 1, 2, {4.5f, 2.2f});
    w.q = make_vlad("q", 1, 2, {1.3f, -0.8f});
    return w;
}

} // namespace testutil
