#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pipeline.hpp"

namespace vstr {

struct GroundTruth {
    // query id -> relevant doc ids (never includes the query itself here;
    // self-handling is an evaluation option).
    std::map<std::string, std::set<std::string>> relevant;

    void save(const std::filesystem::path& path) const;
    static GroundTruth load(const std::filesystem::path& path);
};

// Non-interpolated average precision of a ranked list against a relevant set.
double average_precision(std::span<const std::string> ranked, const std::set<std::string>& relevant);

double mean_ap(const std::map<std::string, std::vector<std::string>>& results, const GroundTruth& gt);

// Sequential scan: top-k store ordinals by descending inner product,
// ties by ascending ordinal. The oracle for recall and rstr equivalence.
std::vector<std::uint32_t> exact_scan(const VladVector& query, const VladStore& store, std::size_t k);

// Exhaustive permutation-distance scan: top-k corpus positions by ascending
// squared Spearman Rho (whole or blockwise per refs.mode), ties ascending.
// Certifies that index scoring reproduces the permutation-distance ranking.
std::vector<std::uint32_t> permutation_scan(const VladVector& query,
                                            std::span<const VladVector> corpus,
                                            const ReferenceSet& refs, std::uint32_t k_x,
                                            std::uint32_t k_q, std::size_t k);

double recall_at(std::span<const std::string> approx, std::span<const std::string> exact,
                 std::size_t k);

// ---------------------------------------------------------------------------
// Synthetic clustered dataset: same-cluster images are perturbed copies of a
// per-cluster prototype; ground truth is co-membership. noise = 0 makes
// same-cluster images identical.
// ---------------------------------------------------------------------------
struct SynthParams {
    std::size_t n_images = 0;
    std::size_t clusters = 0;
    std::size_t dim = 0;
    std::size_t vocab = 0; // number of anchor points shaping descriptor space
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::size_t per_image = 0; // descriptors per image; 0 = 4 * vocab
};

struct SynthDataset {
    std::vector<LocalDescriptorSet> corpus;
    std::vector<std::string> query_ids; // first image of each cluster
    GroundTruth gt;
};

SynthDataset synth_dataset(const SynthParams& params);

// ---------------------------------------------------------------------------
// Full evaluation of one pipeline configuration over a query set.
// ---------------------------------------------------------------------------
struct EvalOptions {
    PipelineConfig pipeline;
    std::size_t threads = 1;
    bool include_self = false; // keep the query doc in its own ranking
    bool timing = true;        // false zeroes latency fields (reproducible reports)
    std::uint64_t index_bytes = 0;
    std::uint64_t m = 0; // reference set size echo
};

struct EvalReport {
    std::string mode;
    std::uint64_t m = 0;
    std::uint32_t k_x = 0;
    std::uint32_t k_q = 0;
    std::uint32_t c = 0;
    std::uint32_t k = 0;
    std::uint32_t prune_query = 0; // 0 = off
    std::uint32_t prune_docs = 0;  // 0 = off
    std::size_t queries = 0;
    double map = 0.0;
    double recall = -1.0; // recall@k vs exact scan; -1 when no store given
    double mean_ms = 0.0;
    double p95_ms = 0.0;
    std::uint64_t postings = 0;
    std::uint64_t index_bytes = 0;

    std::string text() const;
    static std::string csv_header();
    std::string csv_row() const;
};

// `index`/`refs` may be null in exact mode; `store` is required for exact,
// rstr, and for recall computation (recall is skipped without it).
EvalReport evaluate(std::span<const VladVector> queries, const GroundTruth& gt,
                    const InvertedIndex* index, const ReferenceSet* refs,
                    const EvalOptions& options, const VladStore* store = nullptr);

} // namespace vstr
