#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "codec.hpp"
#include "index.hpp"
#include "vlad.hpp"

namespace vstr {

enum class SearchMode : std::uint8_t {
    str = 0,        // whole-vector surrogate search
    rstr = 1,       // str + reordering of the top-c candidates by inner product
    bstr = 2,       // blockwise surrogate search, no reordering
    bstr_tfidf = 3, // bstr with tf-idf query pruning
    exact = 4,      // sequential inner-product scan (evaluation baseline)
};

const char* mode_name(SearchMode mode);
std::optional<SearchMode> parse_mode(const std::string& name);

struct PipelineConfig {
    SearchMode mode = SearchMode::str;
    std::uint32_t k_x = 50;
    std::uint32_t k_q = 50;
    std::uint32_t c = 1000; // reorder candidate count (rstr)
    std::uint32_t k = 10;   // result count
    std::optional<std::uint32_t> prune_query;
    std::optional<std::uint32_t> prune_docs;

    void validate(std::size_t m) const;
};

// Original normalized vectors kept for reordering and exact scans. Entries
// are stored in index-ordinal order so ordinals are shared with the index.
class VladStore {
public:
    void add(VladVector v);

    std::size_t size() const { return vectors_.size(); }
    const VladVector& at(std::uint32_t ordinal) const { return vectors_[ordinal]; }
    const VladVector* find(const std::string& id) const;

    void save(const std::filesystem::path& path) const;
    static VladStore load(const std::filesystem::path& path);

private:
    std::vector<VladVector> vectors_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
};

struct SearchHit {
    std::string doc_id;
    double score = 0.0;
};

struct SearchResult {
    std::vector<SearchHit> hits;
    double latency_ms = 0.0;
    std::size_t candidates_scanned = 0;
};

struct EncodedCorpus {
    std::vector<SurrogateDocument> docs;
    std::vector<std::string> skipped; // unindexable (all-zero) image ids
};

// Encodes every vector with the depth k_x; whole or blockwise follows
// refs.mode. Degenerate vectors are skipped and reported, not fatal.
EncodedCorpus encode_corpus(std::span<const VladVector> vlads, const ReferenceSet& refs,
                            std::uint32_t k_x);

// Candidates reordered by descending inner product with the query, ties by
// ascending ordinal; returns the best k.
std::vector<std::uint32_t> rerank(std::span<const std::uint32_t> candidates,
                                  const VladVector& query, const VladStore& store, std::size_t k);

// One query against a sealed index. `store` is required for rstr and exact
// modes. The query is encoded with k_q (and pruned when configured).
SearchResult search(const VladVector& query, const InvertedIndex& index, const ReferenceSet& refs,
                    const PipelineConfig& config, const VladStore* store = nullptr);

// Encode + index a corpus in one step. Store entries stay aligned with index
// ordinals (skipped vectors appear in neither). prune_docs triggers the
// two-pass tf-idf document reduction.
struct BuildResult {
    InvertedIndex index;
    VladStore store; // empty unless with_store
    std::vector<std::string> skipped;
};

BuildResult build_corpus_index(std::span<const VladVector> vlads, const ReferenceSet& refs,
                               std::uint32_t k_x, std::optional<std::uint32_t> prune_docs,
                               bool with_store);

} // namespace vstr
