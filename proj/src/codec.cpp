#include "codec.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace vstr {

namespace {

double sq_dist(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

std::string bytes_of(std::span<const float> v) {
    return {reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float)};
}

std::int64_t sq(std::int64_t x) { return x * x; }

} // namespace

std::string term_key(std::uint32_t ref_index) { return "r" + std::to_string(ref_index + 1); }

std::string term_key(std::uint32_t ref_index, std::uint32_t block_index) {
    return "r" + std::to_string(ref_index + 1) + "_b" + std::to_string(block_index + 1);
}

ReferenceSet select_references(std::span<const VladVector> dataset, std::size_t m, RefMode mode,
                               std::uint64_t seed) {
    require(m > 0, errc::invalid_argument, "select_references: m must be positive");

    // Candidate pool: whole vectors, or nonzero blocks. Duplicates collapse
    // to the first occurrence so sampling cannot produce equal references.
    std::size_t dim = 0;
    std::vector<std::span<const float>> pool;
    std::unordered_set<std::string> seen;
    auto offer = [&](std::span<const float> v) {
        if (seen.insert(bytes_of(v)).second) pool.push_back(v);
    };

    for (const auto& v : dataset) {
        if (mode == RefMode::whole) {
            if (v.degenerate) continue;
            dim = v.dim();
            offer(std::span<const float>(v.values));
        } else {
            dim = v.block_dim;
            for (std::size_t j = 0; j < v.block_count; ++j)
                if (!v.block_is_zero(j)) offer(v.block(j));
        }
    }
    require(pool.size() >= m, errc::invalid_argument, "insufficient distinct candidates");

    rng rand(seed);
    auto picks = rand.sample_indices(static_cast<std::uint32_t>(pool.size()),
                                     static_cast<std::uint32_t>(m));

    ReferenceSet rs;
    rs.mode = mode;
    rs.dim = dim;
    rs.seed = seed;
    rs.refs.reserve(m * dim);
    for (auto idx : picks) rs.refs.insert(rs.refs.end(), pool[idx].begin(), pool[idx].end());
    return rs;
}

PermutationVector compute_permutation(std::span<const float> object, const ReferenceSet& refs) {
    require(object.size() == refs.dim, errc::invalid_argument,
            "compute_permutation: dimension mismatch");
    std::size_t m = refs.size();
    std::vector<double> dist(m);
    for (std::size_t i = 0; i < m; ++i) dist[i] = sq_dist(object, refs.ref(i));

    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    });

    PermutationVector ranks(m);
    for (std::size_t pos = 0; pos < m; ++pos) ranks[order[pos]] = static_cast<std::uint32_t>(pos + 1);
    return ranks;
}

TruncatedPermutation truncate_permutation(const PermutationVector& p, std::uint32_t k) {
    require(k >= 1 && k <= p.size(), errc::invalid_argument, "truncate: k out of range");
    TruncatedPermutation t;
    t.k = k;
    t.m = static_cast<std::uint32_t>(p.size());
    t.entries.reserve(k);
    for (std::uint32_t i = 0; i < p.size(); ++i)
        if (p[i] <= k) t.entries.emplace_back(i, p[i]);
    return t;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> surrogate_weights(const TruncatedPermutation& t) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> w;
    w.reserve(t.entries.size());
    for (auto [ref, rank] : t.entries) w.emplace_back(ref, t.k + 1 - rank);
    return w;
}

std::int64_t spearman_rho_loc(const TruncatedPermutation& o, const TruncatedPermutation& q) {
    require(o.m == q.m, errc::invalid_argument, "spearman_rho_loc: reference set size mismatch");
    const std::int64_t ko = o.k, kq = q.k;
    std::int64_t total = 0;
    std::size_t covered = 0;

    auto io = o.entries.begin(), eo = o.entries.end();
    auto iq = q.entries.begin(), eq = q.entries.end();
    while (io != eo || iq != eq) {
        if (iq == eq || (io != eo && io->first < iq->first)) {
            total += sq(static_cast<std::int64_t>(io->second) - (kq + 1));
            ++io;
        } else if (io == eo || iq->first < io->first) {
            total += sq((ko + 1) - static_cast<std::int64_t>(iq->second));
            ++iq;
        } else {
            total += sq(static_cast<std::int64_t>(io->second) - static_cast<std::int64_t>(iq->second));
            ++io;
            ++iq;
        }
        ++covered;
    }
    total += static_cast<std::int64_t>(o.m - covered) * sq(ko - kq);
    return total;
}

namespace {

// Distance contribution of a block pair where one side is a zero block,
// i.e. its truncated ranks are all k+1 (weight vector zero).
std::int64_t zero_vs_ranked(const TruncatedPermutation& t, std::int64_t k_zero_side) {
    std::int64_t total = 0;
    for (auto [ref, rank] : t.entries)
        total += sq((k_zero_side + 1) - static_cast<std::int64_t>(rank));
    total += static_cast<std::int64_t>(t.m - t.entries.size()) *
             sq(k_zero_side - static_cast<std::int64_t>(t.k));
    return total;
}

} // namespace

std::int64_t blockwise_distance(const VladVector& a, const VladVector& b, const ReferenceSet& refs,
                                std::uint32_t k_x, std::uint32_t k_q) {
    require(refs.mode == RefMode::blockwise, errc::invalid_argument,
            "blockwise_distance: reference set is not blockwise");
    require(a.block_count == b.block_count && a.block_dim == b.block_dim,
            errc::invalid_argument, "blockwise_distance: shape mismatch");
    require(a.block_dim == refs.dim, errc::invalid_argument,
            "blockwise_distance: block dimension mismatch");
    const std::int64_t m = static_cast<std::int64_t>(refs.size());

    std::int64_t total = 0;
    for (std::size_t j = 0; j < a.block_count; ++j) {
        bool az = a.block_is_zero(j);
        bool bz = b.block_is_zero(j);
        if (az && bz) {
            total += m * sq(static_cast<std::int64_t>(k_x) - static_cast<std::int64_t>(k_q));
        } else if (az) {
            auto tq = truncate_permutation(compute_permutation(b.block(j), refs), k_q);
            total += zero_vs_ranked(tq, k_x);
        } else if (bz) {
            auto to = truncate_permutation(compute_permutation(a.block(j), refs), k_x);
            total += zero_vs_ranked(to, k_q);
        } else {
            auto to = truncate_permutation(compute_permutation(a.block(j), refs), k_x);
            auto tq = truncate_permutation(compute_permutation(b.block(j), refs), k_q);
            total += spearman_rho_loc(to, tq);
        }
    }
    return total;
}

SurrogateDocument encode_str(const VladVector& v, const ReferenceSet& refs, std::uint32_t k) {
    require(refs.mode == RefMode::whole, errc::invalid_argument,
            "encode_str: reference set is not whole-vector");
    require(!v.degenerate, errc::unindexable, "unindexable object: " + v.image_id);

    SurrogateDocument doc;
    doc.doc_id = v.image_id;
    auto t = truncate_permutation(compute_permutation(std::span<const float>(v.values), refs), k);
    for (auto [ref, weight] : surrogate_weights(t)) doc.terms.emplace(term_key(ref), weight);
    return doc;
}

SurrogateDocument encode_bstr(const VladVector& v, const ReferenceSet& refs, std::uint32_t k) {
    require(refs.mode == RefMode::blockwise, errc::invalid_argument,
            "encode_bstr: reference set is not blockwise");
    require(v.block_dim == refs.dim, errc::invalid_argument,
            "encode_bstr: block dimension mismatch");
    require(!v.degenerate, errc::unindexable, "unindexable object: " + v.image_id);

    SurrogateDocument doc;
    doc.doc_id = v.image_id;
    bool any = false;
    for (std::size_t j = 0; j < v.block_count; ++j) {
        if (v.block_is_zero(j)) continue;
        any = true;
        auto t = truncate_permutation(compute_permutation(v.block(j), refs), k);
        for (auto [ref, weight] : surrogate_weights(t))
            doc.terms.emplace(term_key(ref, static_cast<std::uint32_t>(j)), weight);
    }
    require(any, errc::unindexable, "unindexable object: " + v.image_id);
    return doc;
}

// --- reference set file ------------------------------------------------------

void ReferenceSet::save(const std::filesystem::path& path) const {
    binary_writer w(path);
    w.magic("PREF");
    w.u32(1);
    w.u8(static_cast<std::uint8_t>(mode));
    w.u32(static_cast<std::uint32_t>(size()));
    w.u32(static_cast<std::uint32_t>(dim));
    w.u64(seed);
    for (float f : refs) w.f32(f);
    w.close();
}

ReferenceSet ReferenceSet::load(const std::filesystem::path& path) {
    binary_reader r(path);
    r.expect_magic("PREF", "reference set");
    std::uint32_t version = r.u32();
    require(version == 1, errc::format, "unsupported reference set version");
    std::uint8_t mode = r.u8();
    require(mode <= 1, errc::format, "corrupt reference set header");
    std::uint32_t m = r.u32();
    std::uint32_t dim = r.u32();
    require(m > 0 && dim > 0, errc::format, "corrupt reference set header");
    ReferenceSet rs;
    rs.mode = static_cast<RefMode>(mode);
    rs.dim = dim;
    rs.seed = r.u64();
    rs.refs.resize(static_cast<std::size_t>(m) * dim);
    for (auto& f : rs.refs) f = r.f32();
    return rs;
}

std::string document_line(const SurrogateDocument& doc) {
    std::string line = doc.doc_id;
    line += '\t';
    bool first = true;
    for (const auto& [term, weight] : doc.terms) {
        if (!first) line += ' ';
        first = false;
        line += term;
        line += ':';
        line += std::to_string(weight);
    }
    return line;
}

void write_documents(std::span<const SurrogateDocument> docs, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(errc::io, "cannot open for writing: " + path.string());
    for (const auto& d : docs) out << document_line(d) << '\n';
    if (!out) fail(errc::io, "write failed: " + path.string());
}

} // namespace vstr
