#pragma once

#include <cstdint>
#include <span>

#include "codec.hpp"
#include "index.hpp"

namespace vstr {

// Keeps the `keep` terms with the largest weight * idf(term). Ties go to the
// larger weight, then to the lexicographically smaller term. Terms unknown to
// `stats` get the maximal idf ln(N/1). Identity when keep >= term count.
SurrogateDocument prune_by_tfidf(const SurrogateDocument& doc, const IndexStats& stats,
                                 std::uint32_t keep);

// Two-pass document pruning: pass 1 indexes the unpruned corpus to obtain
// document frequencies, pass 2 prunes every document against those stats and
// builds the final sealed index.
InvertedIndex build_pruned_index(std::span<const SurrogateDocument> docs, std::uint32_t keep);

} // namespace vstr
