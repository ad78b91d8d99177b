#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "codec.hpp"
#include "common.hpp"

namespace vstr {

struct Posting {
    std::uint32_t doc = 0; // ordinal
    std::uint32_t weight = 0;
};

struct ScoredHit {
    std::uint32_t doc = 0;
    std::int64_t score = 0;
};

// Frozen corpus statistics exposed after seal().
struct IndexStats {
    std::uint64_t doc_count = 0;
    std::uint64_t term_count = 0;
    std::uint64_t postings_count = 0;
    std::unordered_map<std::string, std::uint32_t> df;

    // ln(N / df); unseen terms get the maximal value ln(N / 1).
    double idf_or_max(const std::string& term) const;
};

// Term-keyed posting lists with an exact integer dot-product scorer.
// Build phase is single-writer; after seal() the index is immutable and
// safe for concurrent queries.
class InvertedIndex {
public:
    // Returns the assigned doc ordinal. Fails on duplicate ids or after seal().
    std::uint32_t add_document(const SurrogateDocument& doc);

    const IndexStats& seal();

    bool sealed() const { return sealed_; }
    const IndexStats& stats() const;

    // Top-c hits with score > 0, ordered by (score desc, ordinal asc).
    // score(o, q) = sum over shared terms of w_q * w_o, exact in int64.
    std::vector<ScoredHit> score_query(const SurrogateDocument& query, std::size_t c) const;

    // ln(N / df(term)); fails for unknown terms.
    double idf(const std::string& term) const;

    std::uint64_t doc_count() const { return doc_ids_.size(); }
    std::uint64_t postings_count() const { return postings_total_; }
    const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_[ordinal]; }

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

private:
    std::uint32_t term_ordinal(const std::string& term) const;

    bool sealed_ = false;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::uint32_t> doc_lookup_;
    std::vector<std::string> term_names_;
    std::unordered_map<std::string, std::uint32_t> term_lookup_;
    std::vector<std::vector<Posting>> postings_;
    std::uint64_t postings_total_ = 0;
    IndexStats stats_;
};

} // namespace vstr
