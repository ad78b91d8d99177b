#include "index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vstr {

double IndexStats::idf_or_max(const std::string& term) const {
    auto it = df.find(term);
    double denom = it == df.end() ? 1.0 : static_cast<double>(it->second);
    return std::log(static_cast<double>(doc_count) / denom);
}

std::uint32_t InvertedIndex::add_document(const SurrogateDocument& doc) {
    require(!sealed_, errc::state, "add_document: index is sealed");
    auto [it, inserted] =
        doc_lookup_.emplace(doc.doc_id, static_cast<std::uint32_t>(doc_ids_.size()));
    require(inserted, errc::invalid_argument, "duplicate doc_id: " + doc.doc_id);
    std::uint32_t ordinal = it->second;
    doc_ids_.push_back(doc.doc_id);

    for (const auto& [term, weight] : doc.terms) {
        require(weight > 0, errc::invalid_argument, "zero term weight in " + doc.doc_id);
        auto [tit, fresh] =
            term_lookup_.emplace(term, static_cast<std::uint32_t>(term_names_.size()));
        if (fresh) {
            term_names_.push_back(term);
            postings_.emplace_back();
        }
        postings_[tit->second].push_back({ordinal, weight});
        ++postings_total_;
    }
    return ordinal;
}

const IndexStats& InvertedIndex::seal() {
    if (sealed_) return stats_;
    require(!doc_ids_.empty(), errc::state, "seal: index is empty");
    sealed_ = true;
    stats_.doc_count = doc_ids_.size();
    stats_.term_count = term_names_.size();
    stats_.postings_count = postings_total_;
    stats_.df.reserve(term_names_.size());
    for (std::size_t t = 0; t < term_names_.size(); ++t)
        stats_.df.emplace(term_names_[t], static_cast<std::uint32_t>(postings_[t].size()));
    return stats_;
}

const IndexStats& InvertedIndex::stats() const {
    require(sealed_, errc::state, "stats: index not sealed");
    return stats_;
}

std::vector<ScoredHit> InvertedIndex::score_query(const SurrogateDocument& query,
                                                  std::size_t c) const {
    require(sealed_, errc::state, "score_query: index not sealed");
    require(c > 0, errc::invalid_argument, "score_query: c must be positive");

    std::vector<std::int64_t> acc(doc_ids_.size(), 0);
    for (const auto& [term, weight] : query.terms) {
        auto it = term_lookup_.find(term);
        if (it == term_lookup_.end()) continue;
        std::int64_t w = weight;
        for (const Posting& p : postings_[it->second])
            acc[p.doc] += w * static_cast<std::int64_t>(p.weight);
    }

    std::vector<ScoredHit> hits;
    for (std::uint32_t d = 0; d < acc.size(); ++d)
        if (acc[d] > 0) hits.push_back({d, acc[d]});

    auto better = [](const ScoredHit& a, const ScoredHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc < b.doc;
    };
    if (hits.size() > c) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(c),
                          hits.end(), better);
        hits.resize(c);
    } else {
        std::sort(hits.begin(), hits.end(), better);
    }
    return hits;
}

double InvertedIndex::idf(const std::string& term) const {
    require(sealed_, errc::state, "idf: index not sealed");
    auto it = term_lookup_.find(term);
    require(it != term_lookup_.end(), errc::not_found, "unknown term: " + term);
    return std::log(static_cast<double>(doc_ids_.size()) /
                    static_cast<double>(postings_[it->second].size()));
}

// --- persistence -------------------------------------------------------------
//
// "PIDX" | u32 version | u64 N | u64 term_count | u64 postings_count
// dictionary: per term (lexicographic): u32 len | bytes | u64 df | u64 offset
// u64 postings section size, then per term: delta-varint ordinals + varint weights
// doc table: per ordinal: u32 len | bytes

void InvertedIndex::save(const std::filesystem::path& path) const {
    require(sealed_, errc::state, "save: index not sealed");

    std::vector<std::uint32_t> term_order(term_names_.size());
    std::iota(term_order.begin(), term_order.end(), 0u);
    std::sort(term_order.begin(), term_order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return term_names_[a] < term_names_[b];
    });

    // Posting blobs first so the dictionary can carry real offsets.
    std::vector<std::string> blobs(term_order.size());
    for (std::size_t pos = 0; pos < term_order.size(); ++pos) {
        const auto& list = postings_[term_order[pos]];
        std::string& blob = blobs[pos];
        std::uint32_t prev = 0;
        bool first = true;
        auto put_varint = [&blob](std::uint64_t v) {
            while (v >= 0x80) {
                blob.push_back(static_cast<char>(static_cast<std::uint8_t>(v) | 0x80));
                v >>= 7;
            }
            blob.push_back(static_cast<char>(v));
        };
        for (const Posting& p : list) {
            put_varint(first ? p.doc : p.doc - prev);
            put_varint(p.weight);
            prev = p.doc;
            first = false;
        }
    }

    binary_writer w(path);
    w.magic("PIDX");
    w.u32(1);
    w.u64(doc_ids_.size());
    w.u64(term_names_.size());
    w.u64(postings_total_);

    std::uint64_t offset = 0;
    for (std::size_t pos = 0; pos < term_order.size(); ++pos) {
        w.str(term_names_[term_order[pos]]);
        w.u64(postings_[term_order[pos]].size());
        w.u64(offset);
        offset += blobs[pos].size();
    }
    w.u64(offset);
    for (const auto& blob : blobs) w.raw(blob.data(), blob.size());
    for (const auto& id : doc_ids_) w.str(id);
    w.close();
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    binary_reader r(path);
    r.expect_magic("PIDX", "index");
    std::uint32_t version = r.u32();
    require(version == 1, errc::format, "unsupported index version");
    std::uint64_t n_docs = r.u64();
    std::uint64_t n_terms = r.u64();
    std::uint64_t n_postings = r.u64();
    require(n_docs > 0, errc::format, "corrupt index header");

    InvertedIndex idx;
    idx.term_names_.reserve(n_terms);
    idx.postings_.reserve(n_terms);

    std::vector<std::uint64_t> dfs(n_terms);
    std::vector<std::uint64_t> offsets(n_terms);
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        std::string name = r.str();
        dfs[t] = r.u64();
        offsets[t] = r.u64();
        auto [it, fresh] =
            idx.term_lookup_.emplace(std::move(name), static_cast<std::uint32_t>(t));
        require(fresh, errc::format, "duplicate term in index file");
        idx.term_names_.push_back(it->first);
    }

    std::uint64_t section = r.u64();
    std::uint64_t consumed = 0;
    std::uint64_t total = 0;
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        require(offsets[t] == consumed, errc::format, "posting offset mismatch");
        std::vector<Posting> list;
        list.reserve(dfs[t]);
        std::uint32_t doc = 0;
        for (std::uint64_t i = 0; i < dfs[t]; ++i) {
            std::uint64_t start = r.tell();
            std::uint64_t gap = r.varint();
            std::uint64_t weight = r.varint();
            consumed += r.tell() - start;
            doc = i == 0 ? static_cast<std::uint32_t>(gap) : doc + static_cast<std::uint32_t>(gap);
            require(doc < n_docs && weight > 0, errc::format, "corrupt posting list");
            list.push_back({doc, static_cast<std::uint32_t>(weight)});
        }
        total += list.size();
        idx.postings_.push_back(std::move(list));
    }
    require(consumed == section, errc::format, "posting section size mismatch");
    require(total == n_postings, errc::format, "postings count mismatch");

    idx.doc_ids_.reserve(n_docs);
    for (std::uint64_t d = 0; d < n_docs; ++d) {
        std::string id = r.str();
        auto [it, fresh] = idx.doc_lookup_.emplace(std::move(id), static_cast<std::uint32_t>(d));
        require(fresh, errc::format, "duplicate doc id in index file");
        idx.doc_ids_.push_back(it->first);
    }
    idx.postings_total_ = total;
    idx.seal();
    return idx;
}

} // namespace vstr
