#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace vstr {

// One image's local descriptors, row-major n x dim. The set may be empty.
struct LocalDescriptorSet {
    std::string image_id;
    std::size_t dim = 0;
    std::vector<float> data;

    std::size_t count() const { return dim == 0 ? 0 : data.size() / dim; }

    std::span<const float> descriptor(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
};

// K-means vocabulary: K centroids of dimension dim, row-major.
struct Codebook {
    std::size_t dim = 0;
    std::vector<float> centroids;

    std::size_t size() const { return dim == 0 ? 0 : centroids.size() / dim; }

    std::span<const float> centroid(std::size_t i) const {
        return {centroids.data() + i * dim, dim};
    }

    void save(const std::filesystem::path& path) const;
    static Codebook load(const std::filesystem::path& path);
};

// Aggregated residual vector: K blocks of dimension block_dim, concatenated.
// zero_flags[i] marks blocks that received no descriptor. `degenerate` is set
// by normalize() when the whole vector is zero; such vectors are unindexable.
struct VladVector {
    std::string image_id;
    std::size_t block_count = 0;
    std::size_t block_dim = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> zero_flags;
    bool degenerate = false;

    std::size_t dim() const { return values.size(); }

    std::span<const float> block(std::size_t i) const {
        return {values.data() + i * block_dim, block_dim};
    }

    bool block_is_zero(std::size_t i) const { return zero_flags[i] != 0; }
};

// Lloyd's k-means over a flat (n x dim) training array, k-means++ seeded.
// Deterministic for fixed inputs and seed. Stops after 25 iterations or when
// no assignment changes; empty clusters are re-seeded with the point farthest
// from its centroid. Fails with "insufficient distinct points" when fewer
// than k distinct training vectors exist.
Codebook train_codebook(std::span<const float> training, std::size_t dim, std::size_t k,
                        std::uint64_t seed, std::size_t* iterations_out = nullptr);

// Index of the nearest centroid by Euclidean distance, ties to the smaller index.
std::size_t assign_nn(std::span<const float> x, const Codebook& codebook);

// Per-codeword residual accumulation. Summation follows descriptor input
// order so the result is bit-identical to a naive per-descriptor loop.
VladVector aggregate(const LocalDescriptorSet& image, const Codebook& codebook);

// Signed square root on every component, then L2 normalization of the whole
// concatenation. An all-zero vector is returned unchanged with `degenerate` set.
VladVector normalize(VladVector v);

double inner_product(const VladVector& a, const VladVector& b);

// Descriptor container file ("PDSC").
std::vector<LocalDescriptorSet> load_descriptors(const std::filesystem::path& path);
void save_descriptors(std::span<const LocalDescriptorSet> sets, const std::filesystem::path& path);

// Aggregate + normalize an entire corpus with one codebook.
std::vector<VladVector> encode_vlads(std::span<const LocalDescriptorSet> images, const Codebook& codebook);

} // namespace vstr
