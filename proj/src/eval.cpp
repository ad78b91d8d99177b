#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace vstr {

double average_precision(std::span<const std::string> ranked, const std::set<std::string>& relevant) {
    require(!relevant.empty(), errc::invalid_argument, "average_precision: empty relevant set");
    std::size_t found = 0;
    double sum = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (relevant.count(ranked[r])) {
            ++found;
            sum += static_cast<double>(found) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

double mean_ap(const std::map<std::string, std::vector<std::string>>& results, const GroundTruth& gt) {
    require(!gt.relevant.empty(), errc::invalid_argument, "mean_ap: empty ground truth");
    double sum = 0.0;
    for (const auto& [query, relevant] : gt.relevant) {
        auto it = results.find(query);
        require(it != results.end(), errc::invalid_argument, "mean_ap: missing result for " + query);
        sum += average_precision(it->second, relevant);
    }
    return sum / static_cast<double>(gt.relevant.size());
}

std::vector<std::uint32_t> exact_scan(const VladVector& query, const VladStore& store, std::size_t k) {
    require(store.size() > 0, errc::invalid_argument, "exact_scan: empty store");
    std::vector<std::uint32_t> all(store.size());
    std::iota(all.begin(), all.end(), 0u);
    return rerank(all, query, store, k);
}

std::vector<std::uint32_t> permutation_scan(const VladVector& query,
                                            std::span<const VladVector> corpus,
                                            const ReferenceSet& refs, std::uint32_t k_x,
                                            std::uint32_t k_q, std::size_t k) {
    std::vector<std::int64_t> dist(corpus.size());
    if (refs.mode == RefMode::whole) {
        auto tq = truncate_permutation(
            compute_permutation(std::span<const float>(query.values), refs), k_q);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            auto to = truncate_permutation(
                compute_permutation(std::span<const float>(corpus[i].values), refs), k_x);
            dist[i] = spearman_rho_loc(to, tq);
        }
    } else {
        for (std::size_t i = 0; i < corpus.size(); ++i)
            dist[i] = blockwise_distance(corpus[i], query, refs, k_x, k_q);
    }

    std::vector<std::uint32_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    });
    if (order.size() > k) order.resize(k);
    return order;
}

double recall_at(std::span<const std::string> approx, std::span<const std::string> exact,
                 std::size_t k) {
    require(k >= 1, errc::invalid_argument, "recall_at: k must be positive");
    std::set<std::string> top_exact(exact.begin(),
                                    exact.begin() + std::min(k, exact.size()));
    std::size_t hit = 0;
    for (std::size_t i = 0; i < std::min(k, approx.size()); ++i)
        if (top_exact.count(approx[i])) ++hit;
    return static_cast<double>(hit) / static_cast<double>(k);
}

// --- ground truth file --------------------------------------------------------

void GroundTruth::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail(errc::io, "cannot open for writing: " + path.string());
    for (const auto& [query, docs] : relevant) {
        out << query << '\t';
        bool first = true;
        for (const auto& d : docs) {
            if (!first) out << ',';
            first = false;
            out << d;
        }
        out << '\n';
    }
    if (!out) fail(errc::io, "write failed: " + path.string());
}

GroundTruth GroundTruth::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open for reading: " + path.string());
    GroundTruth gt;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        require(tab != std::string::npos, errc::format,
                strfmt("ground truth line %zu: missing TAB", lineno));
        std::string query = line.substr(0, tab);
        std::set<std::string> docs;
        std::stringstream rest(line.substr(tab + 1));
        std::string id;
        while (std::getline(rest, id, ','))
            if (!id.empty()) docs.insert(id);
        require(!docs.empty(), errc::format,
                strfmt("ground truth line %zu: empty relevant set", lineno));
        gt.relevant[std::move(query)] = std::move(docs);
    }
    return gt;
}

// --- synthetic data -----------------------------------------------------------

SynthDataset synth_dataset(const SynthParams& params) {
    require(params.n_images > 0 && params.clusters > 0 && params.dim > 0 && params.vocab > 0,
            errc::invalid_argument, "synth: parameters must be positive");
    require(params.n_images >= 2 * params.clusters, errc::invalid_argument,
            "synth: need at least two images per cluster");

    const std::size_t d = params.dim;
    const std::size_t per_image = params.per_image ? params.per_image : 4 * params.vocab;
    rng rand(params.seed);

    // Global anchor points give the descriptor space its codeword structure.
    std::vector<float> anchors(params.vocab * d);
    for (auto& a : anchors) a = static_cast<float>(rand.uniform(-4.0, 4.0));

    // Per-cluster prototype descriptor sets over a subset of anchors.
    std::size_t used_count = std::max<std::size_t>(1, (3 * params.vocab) / 4);
    std::vector<std::vector<float>> prototypes(params.clusters);
    for (std::size_t c = 0; c < params.clusters; ++c) {
        auto used = rand.sample_indices(static_cast<std::uint32_t>(params.vocab),
                                        static_cast<std::uint32_t>(used_count));
        std::vector<float> offsets(used_count * d);
        for (auto& o : offsets) o = static_cast<float>(0.6 * rand.normal());
        auto& proto = prototypes[c];
        proto.resize(per_image * d);
        for (std::size_t t = 0; t < per_image; ++t) {
            std::size_t u = t % used_count;
            for (std::size_t j = 0; j < d; ++j)
                proto[t * d + j] = anchors[used[u] * d + j] + offsets[u * d + j] +
                                   static_cast<float>(0.2 * rand.normal());
        }
    }

    SynthDataset out;
    out.corpus.reserve(params.n_images);
    for (std::size_t g = 0; g < params.n_images; ++g) {
        std::size_t c = g % params.clusters;
        LocalDescriptorSet s;
        s.image_id = strfmt("img%06zu", g);
        s.dim = d;
        s.data.resize(per_image * d);
        for (std::size_t i = 0; i < s.data.size(); ++i)
            s.data[i] = prototypes[c][i] + static_cast<float>(params.noise * rand.normal());
        out.corpus.push_back(std::move(s));
    }

    for (std::size_t c = 0; c < params.clusters; ++c) {
        const std::string& query = out.corpus[c].image_id;
        out.query_ids.push_back(query);
        auto& rel = out.gt.relevant[query];
        for (std::size_t g = c + params.clusters; g < params.n_images; g += params.clusters)
            rel.insert(out.corpus[g].image_id);
    }
    return out;
}

// --- evaluation ----------------------------------------------------------------

namespace {

std::vector<std::string> ranked_ids(const SearchResult& res) {
    std::vector<std::string> ids;
    ids.reserve(res.hits.size());
    for (const auto& h : res.hits) ids.push_back(h.doc_id);
    return ids;
}

// Drop the query's own document, then cut to k.
void finalize_ranking(std::vector<std::string>& ids, const std::string& self, bool include_self,
                      std::size_t k) {
    if (!include_self)
        std::erase(ids, self);
    if (ids.size() > k) ids.resize(k);
}

} // namespace

EvalReport evaluate(std::span<const VladVector> queries, const GroundTruth& gt,
                    const InvertedIndex* index, const ReferenceSet* refs,
                    const EvalOptions& options, const VladStore* store) {
    const PipelineConfig& cfg = options.pipeline;
    bool is_exact = cfg.mode == SearchMode::exact;
    require(is_exact || (index && refs), errc::invalid_argument,
            "evaluate: index and references required");
    require(!(is_exact || cfg.mode == SearchMode::rstr) || store, errc::invalid_argument,
            std::string(mode_name(cfg.mode)) + " mode requires a vector store");
    require(!queries.empty(), errc::invalid_argument, "evaluate: no queries");

    std::string missing;
    for (const auto& q : queries)
        if (!gt.relevant.count(q.image_id)) missing += (missing.empty() ? "" : ", ") + q.image_id;
    require(missing.empty(), errc::invalid_argument, "missing ground truth for: " + missing);

    // Fetch one extra hit so dropping the query itself keeps depth k.
    std::size_t depth = cfg.k + (options.include_self ? 0 : 1);
    PipelineConfig run_cfg = cfg;
    run_cfg.k = static_cast<std::uint32_t>(depth);
    if (cfg.mode == SearchMode::rstr)
        run_cfg.c = std::max(run_cfg.c, run_cfg.k);

    std::size_t n = queries.size();
    std::vector<double> ap(n, 0.0), lat(n, 0.0), rec(n, 0.0);
    bool with_recall = store != nullptr;

    static const InvertedIndex empty_index;
    static const ReferenceSet empty_refs;
    auto worker = [&](std::size_t t, std::size_t stride) {
        for (std::size_t i = t; i < n; i += stride) {
            const VladVector& q = queries[i];
            SearchResult res = search(q, index ? *index : empty_index,
                                      refs ? *refs : empty_refs, run_cfg, store);
            lat[i] = res.latency_ms;
            auto ids = ranked_ids(res);
            finalize_ranking(ids, q.image_id, options.include_self, cfg.k);
            ap[i] = average_precision(ids, gt.relevant.at(q.image_id));
            if (with_recall) {
                auto exact_ord = exact_scan(q, *store, depth);
                std::vector<std::string> exact_ids;
                exact_ids.reserve(exact_ord.size());
                for (auto o : exact_ord) exact_ids.push_back(store->at(o).image_id);
                finalize_ranking(exact_ids, q.image_id, options.include_self, cfg.k);
                rec[i] = recall_at(ids, exact_ids, cfg.k);
            }
        }
    };

    if (options.threads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < options.threads; ++t)
            pool.emplace_back(worker, t, options.threads);
        for (auto& th : pool) th.join();
    }

    EvalReport rep;
    rep.mode = mode_name(cfg.mode);
    rep.m = options.m;
    rep.k_x = cfg.k_x;
    rep.k_q = cfg.k_q;
    rep.c = cfg.c;
    rep.k = cfg.k;
    rep.prune_query = cfg.prune_query.value_or(0);
    rep.prune_docs = cfg.prune_docs.value_or(0);
    rep.queries = n;
    rep.map = std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(n);
    if (with_recall)
        rep.recall = std::accumulate(rec.begin(), rec.end(), 0.0) / static_cast<double>(n);
    if (options.timing) {
        std::vector<double> sorted = lat;
        std::sort(sorted.begin(), sorted.end());
        rep.mean_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(n);
        std::size_t p95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
        rep.p95_ms = sorted[std::max<std::size_t>(p95, 1) - 1];
    }
    rep.postings = index ? index->postings_count() : 0;
    rep.index_bytes = options.index_bytes;
    return rep;
}

std::string EvalReport::text() const {
    std::string s;
    s += strfmt("mode %s\n", mode.c_str());
    s += strfmt("m %llu\n", static_cast<unsigned long long>(m));
    s += strfmt("k_x %u\n", k_x);
    s += strfmt("k_q %u\n", k_q);
    s += strfmt("c %u\n", c);
    s += strfmt("k %u\n", k);
    s += strfmt("prune_query %u\n", prune_query);
    s += strfmt("prune_docs %u\n", prune_docs);
    s += strfmt("queries %zu\n", queries);
    s += strfmt("map %.6f\n", map);
    s += recall < 0 ? "recall_at_k NA\n" : strfmt("recall_at_k %.6f\n", recall);
    s += strfmt("mean_ms %.3f\n", mean_ms);
    s += strfmt("p95_ms %.3f\n", p95_ms);
    s += strfmt("postings %llu\n", static_cast<unsigned long long>(postings));
    s += strfmt("index_bytes %llu\n", static_cast<unsigned long long>(index_bytes));
    return s;
}

std::string EvalReport::csv_header() {
    return "mode,m,k_x,k_q,c,k,prune_query,prune_docs,queries,map,recall_at_k,mean_ms,p95_ms,"
           "postings,index_bytes";
}

std::string EvalReport::csv_row() const {
    std::string rec = recall < 0 ? "NA" : strfmt("%.6f", recall);
    return strfmt("%s,%llu,%u,%u,%u,%u,%u,%u,%zu,%.6f,%s,%.3f,%.3f,%llu,%llu", mode.c_str(),
                  static_cast<unsigned long long>(m), k_x, k_q, c, k, prune_query, prune_docs,
                  queries, map, rec.c_str(), mean_ms, p95_ms,
                  static_cast<unsigned long long>(postings),
                  static_cast<unsigned long long>(index_bytes));
}

} // namespace vstr
