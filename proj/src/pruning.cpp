#include "pruning.hpp"

#include <algorithm>

namespace vstr {

SurrogateDocument prune_by_tfidf(const SurrogateDocument& doc, const IndexStats& stats,
                                 std::uint32_t keep) {
    require(keep >= 1, errc::invalid_argument, "prune_by_tfidf: keep must be positive");
    if (doc.terms.size() <= keep) return doc;

    struct Scored {
        const std::string* term;
        std::uint32_t weight;
        double tfidf;
    };
    std::vector<Scored> scored;
    scored.reserve(doc.terms.size());
    for (const auto& [term, weight] : doc.terms)
        scored.push_back({&term, weight, weight * stats.idf_or_max(term)});

    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
        if (a.weight != b.weight) return a.weight > b.weight;
        return *a.term < *b.term;
    });

    SurrogateDocument pruned;
    pruned.doc_id = doc.doc_id;
    for (std::uint32_t i = 0; i < keep; ++i)
        pruned.terms.emplace(*scored[i].term, scored[i].weight);
    return pruned;
}

InvertedIndex build_pruned_index(std::span<const SurrogateDocument> docs, std::uint32_t keep) {
    require(!docs.empty(), errc::invalid_argument, "build_pruned_index: empty corpus");

    InvertedIndex analysis;
    for (const auto& d : docs) analysis.add_document(d);
    const IndexStats& stats = analysis.seal();

    InvertedIndex pruned;
    for (const auto& d : docs) pruned.add_document(prune_by_tfidf(d, stats, keep));
    pruned.seal();
    return pruned;
}

} // namespace vstr
