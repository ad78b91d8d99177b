#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "vlad.hpp"

namespace vstr {

enum class RefMode : std::uint8_t {
    whole = 0,     // references are whole concatenated vectors
    blockwise = 1, // one shared reference set for every sub-vector block
};

// m distinct pivot vectors. In blockwise mode refs have the block dimension
// and every block is ranked against the same set.
struct ReferenceSet {
    RefMode mode = RefMode::whole;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::vector<float> refs;

    std::size_t size() const { return dim == 0 ? 0 : refs.size() / dim; }

    std::span<const float> ref(std::size_t i) const { return {refs.data() + i * dim, dim}; }

    void save(const std::filesystem::path& path) const;
    static ReferenceSet load(const std::filesystem::path& path);
};

// ranks[i] = 1-based rank of reference i when references are ordered by
// increasing distance from the object; always a bijection onto 1..m.
using PermutationVector = std::vector<std::uint32_t>;

// Top-k truncation: entries hold (reference index, rank <= k), sorted by
// reference index; every absent reference has implicit rank k+1.
struct TruncatedPermutation {
    std::uint32_t k = 0;
    std::uint32_t m = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;
};

// Sparse term->weight document over the reference-key dictionary.
// std::map keeps term iteration deterministic for indexing and text output.
struct SurrogateDocument {
    std::string doc_id;
    std::map<std::string, std::uint32_t> terms;
};

// Reference keys: "r<i>" in whole mode, "r<i>_b<j>" in blockwise mode
// (1-based i and j).
std::string term_key(std::uint32_t ref_index);
std::string term_key(std::uint32_t ref_index, std::uint32_t block_index);

// Samples m distinct reference objects from the corpus: whole normalized
// vectors, or nonzero sub-vector blocks in blockwise mode. Duplicate
// candidates are collapsed before sampling so the result is pairwise distinct.
ReferenceSet select_references(std::span<const VladVector> dataset, std::size_t m, RefMode mode,
                               std::uint64_t seed);

// Ranks references by ascending Euclidean distance from `object`; distance
// ties go to the smaller reference index.
PermutationVector compute_permutation(std::span<const float> object, const ReferenceSet& refs);

TruncatedPermutation truncate_permutation(const PermutationVector& p, std::uint32_t k);

// weight(i) = k + 1 - rank(i) for the k stored references; sorted by ref index.
std::vector<std::pair<std::uint32_t, std::uint32_t>> surrogate_weights(const TruncatedPermutation& t);

// Squared location-parameter Spearman Rho between two truncated permutations
// over the same reference set (possibly different truncation depths).
// Integer-exact.
std::int64_t spearman_rho_loc(const TruncatedPermutation& o, const TruncatedPermutation& q);

// Whole-vector and blockwise surrogate encodings. Degenerate (all-zero)
// vectors are unindexable; zero blocks emit no terms.
SurrogateDocument encode_str(const VladVector& v, const ReferenceSet& refs, std::uint32_t k);
SurrogateDocument encode_bstr(const VladVector& v, const ReferenceSet& refs, std::uint32_t k);

// Blockwise squared distance: sum of per-block Spearman Rho terms, where a
// zero block behaves as if every reference sat beyond the truncation depth
// (its weight vector is zero).
std::int64_t blockwise_distance(const VladVector& a, const VladVector& b, const ReferenceSet& refs,
                                std::uint32_t k_x, std::uint32_t k_q);

// Debug/interop text form: "doc_id TAB term:weight ..." with terms sorted.
std::string document_line(const SurrogateDocument& doc);
void write_documents(std::span<const SurrogateDocument> docs, const std::filesystem::path& path);

} // namespace vstr
