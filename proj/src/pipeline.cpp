#include "pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "pruning.hpp"

namespace vstr {

const char* mode_name(SearchMode mode) {
    switch (mode) {
        case SearchMode::str: return "str";
        case SearchMode::rstr: return "rstr";
        case SearchMode::bstr: return "bstr";
        case SearchMode::bstr_tfidf: return "bstr-tfidf";
        case SearchMode::exact: return "exact";
    }
    return "?";
}

std::optional<SearchMode> parse_mode(const std::string& name) {
    if (name == "str") return SearchMode::str;
    if (name == "rstr") return SearchMode::rstr;
    if (name == "bstr") return SearchMode::bstr;
    if (name == "bstr-tfidf" || name == "bstr_tfidf") return SearchMode::bstr_tfidf;
    if (name == "exact") return SearchMode::exact;
    return std::nullopt;
}

void PipelineConfig::validate(std::size_t m) const {
    require(k >= 1, errc::invalid_argument, "config: k must be positive");
    if (mode == SearchMode::exact) return;
    require(k_x >= 1 && k_x <= m, errc::invalid_argument, "config: k_x out of 1..m");
    require(k_q >= 1 && k_q <= m, errc::invalid_argument, "config: k_q out of 1..m");
    if (mode == SearchMode::rstr)
        require(c >= k, errc::invalid_argument, "config: rstr requires c >= k");
    if (prune_query) require(*prune_query >= 1, errc::invalid_argument, "config: prune_query must be positive");
    if (prune_docs) require(*prune_docs >= 1, errc::invalid_argument, "config: prune_docs must be positive");
}

void VladStore::add(VladVector v) {
    auto [it, fresh] = by_id_.emplace(v.image_id, static_cast<std::uint32_t>(vectors_.size()));
    require(fresh, errc::invalid_argument, "duplicate id in store: " + v.image_id);
    vectors_.push_back(std::move(v));
}

const VladVector* VladStore::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &vectors_[it->second];
}

void VladStore::save(const std::filesystem::path& path) const {
    require(!vectors_.empty(), errc::state, "store: nothing to save");
    std::uint32_t k = static_cast<std::uint32_t>(vectors_.front().block_count);
    std::uint32_t d = static_cast<std::uint32_t>(vectors_.front().block_dim);
    binary_writer w(path);
    w.magic("PVST");
    w.u32(1);
    w.u32(k);
    w.u32(d);
    w.u64(vectors_.size());
    for (const auto& v : vectors_) {
        require(v.block_count == k && v.block_dim == d, errc::invalid_argument,
                "store: mixed vector shapes");
        w.str(v.image_id);
        for (float f : v.values) w.f32(f);
    }
    w.close();
}

VladStore VladStore::load(const std::filesystem::path& path) {
    binary_reader r(path);
    r.expect_magic("PVST", "vector store");
    std::uint32_t version = r.u32();
    require(version == 1, errc::format, "unsupported store version");
    std::uint32_t k = r.u32();
    std::uint32_t d = r.u32();
    std::uint64_t count = r.u64();
    require(k > 0 && d > 0, errc::format, "corrupt store header");

    VladStore store;
    for (std::uint64_t i = 0; i < count; ++i) {
        VladVector v;
        v.image_id = r.str();
        v.block_count = k;
        v.block_dim = d;
        v.values.resize(static_cast<std::size_t>(k) * d);
        for (auto& f : v.values) f = r.f32();
        // Flags are not persisted; reconstruct from the values.
        v.zero_flags.resize(k);
        bool all_zero = true;
        for (std::uint32_t b = 0; b < k; ++b) {
            bool z = true;
            for (std::uint32_t j = 0; j < d && z; ++j)
                if (v.values[static_cast<std::size_t>(b) * d + j] != 0.0f) z = false;
            v.zero_flags[b] = z ? 1 : 0;
            if (!z) all_zero = false;
        }
        v.degenerate = all_zero;
        store.add(std::move(v));
    }
    return store;
}

EncodedCorpus encode_corpus(std::span<const VladVector> vlads, const ReferenceSet& refs,
                            std::uint32_t k_x) {
    EncodedCorpus out;
    out.docs.reserve(vlads.size());
    for (const auto& v : vlads) {
        try {
            out.docs.push_back(refs.mode == RefMode::whole ? encode_str(v, refs, k_x)
                                                           : encode_bstr(v, refs, k_x));
        } catch (const error& e) {
            if (e.code() != errc::unindexable) throw;
            out.skipped.push_back(v.image_id);
        }
    }
    return out;
}

std::vector<std::uint32_t> rerank(std::span<const std::uint32_t> candidates,
                                  const VladVector& query, const VladStore& store, std::size_t k) {
    struct Entry {
        double ip;
        std::uint32_t ordinal;
    };
    std::vector<Entry> entries;
    entries.reserve(candidates.size());
    for (std::uint32_t ordinal : candidates) {
        require(ordinal < store.size(), errc::not_found, "rerank: candidate missing from store");
        entries.push_back({inner_product(store.at(ordinal), query), ordinal});
    }
    auto better = [](const Entry& a, const Entry& b) {
        if (a.ip != b.ip) return a.ip > b.ip;
        return a.ordinal < b.ordinal;
    };
    std::size_t keep = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep),
                      entries.end(), better);
    std::vector<std::uint32_t> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(entries[i].ordinal);
    return out;
}

namespace {

SearchResult exact_search(const VladVector& query, const VladStore& store, std::size_t k) {
    std::vector<std::uint32_t> all(store.size());
    for (std::uint32_t i = 0; i < store.size(); ++i) all[i] = i;
    auto top = rerank(all, query, store, k);
    SearchResult res;
    res.candidates_scanned = store.size();
    for (std::uint32_t ordinal : top)
        res.hits.push_back({store.at(ordinal).image_id, inner_product(store.at(ordinal), query)});
    return res;
}

} // namespace

SearchResult search(const VladVector& query, const InvertedIndex& index, const ReferenceSet& refs,
                    const PipelineConfig& config, const VladStore* store) {
    config.validate(refs.size());
    require(!query.degenerate, errc::unindexable, "degenerate query vector");
    bool needs_store = config.mode == SearchMode::rstr || config.mode == SearchMode::exact;
    require(!needs_store || store != nullptr, errc::invalid_argument,
            std::string(mode_name(config.mode)) + " mode requires a vector store");

    auto t0 = std::chrono::steady_clock::now();
    SearchResult res;

    if (config.mode == SearchMode::exact) {
        res = exact_search(query, *store, config.k);
    } else {
        SurrogateDocument q = refs.mode == RefMode::whole
                                  ? encode_str(query, refs, config.k_q)
                                  : encode_bstr(query, refs, config.k_q);
        if (config.prune_query) q = prune_by_tfidf(q, index.stats(), *config.prune_query);

        std::size_t fetch = std::max<std::size_t>(config.k,
                                                  config.mode == SearchMode::rstr ? config.c : 0);
        auto hits = index.score_query(q, fetch);
        res.candidates_scanned = hits.size();

        if (config.mode == SearchMode::rstr) {
            std::vector<std::uint32_t> candidates;
            candidates.reserve(hits.size());
            for (const auto& h : hits) candidates.push_back(h.doc);
            for (std::uint32_t ordinal : rerank(candidates, query, *store, config.k))
                res.hits.push_back(
                    {store->at(ordinal).image_id, inner_product(store->at(ordinal), query)});
        } else {
            if (hits.size() > config.k) hits.resize(config.k);
            for (const auto& h : hits)
                res.hits.push_back({index.doc_id(h.doc), static_cast<double>(h.score)});
        }
    }

    auto t1 = std::chrono::steady_clock::now();
    res.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return res;
}

BuildResult build_corpus_index(std::span<const VladVector> vlads, const ReferenceSet& refs,
                               std::uint32_t k_x, std::optional<std::uint32_t> prune_docs,
                               bool with_store) {
    BuildResult out;
    std::vector<SurrogateDocument> docs;
    docs.reserve(vlads.size());
    for (const auto& v : vlads) {
        try {
            docs.push_back(refs.mode == RefMode::whole ? encode_str(v, refs, k_x)
                                                       : encode_bstr(v, refs, k_x));
        } catch (const error& e) {
            if (e.code() != errc::unindexable) throw;
            out.skipped.push_back(v.image_id);
            continue;
        }
        if (with_store) out.store.add(v);
    }
    require(!docs.empty(), errc::invalid_argument, "no indexable documents in corpus");

    if (prune_docs) {
        out.index = build_pruned_index(docs, *prune_docs);
    } else {
        for (const auto& d : docs) out.index.add_document(d);
        out.index.seal();
    }
    return out;
}

} // namespace vstr

