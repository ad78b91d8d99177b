#include "vstr.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "codec.hpp"
#include "common.hpp"
#include "eval.hpp"
#include "index.hpp"
#include "pipeline.hpp"
#include "vlad.hpp"

struct vstr_dataset {
    std::vector<vstr::LocalDescriptorSet> sets;
};
struct vstr_codebook {
    vstr::Codebook cb;
};
struct vstr_refset {
    vstr::ReferenceSet rs;
};
struct vstr_index {
    vstr::InvertedIndex idx;
};
struct vstr_store {
    vstr::VladStore st;
};
struct vstr_groundtruth {
    vstr::GroundTruth gt;
};
struct vstr_result {
    vstr::SearchResult res;
};
struct vstr_report {
    vstr::EvalReport rep;
    std::string text;
    std::string csv;
};

namespace {

thread_local std::string g_last_error;

vstr_status map_code(vstr::errc code) {
    switch (code) {
        case vstr::errc::invalid_argument: return VSTR_ERR_INVALID_ARGUMENT;
        case vstr::errc::io: return VSTR_ERR_IO;
        case vstr::errc::format: return VSTR_ERR_FORMAT;
        case vstr::errc::state: return VSTR_ERR_STATE;
        case vstr::errc::not_found: return VSTR_ERR_NOT_FOUND;
        case vstr::errc::unindexable: return VSTR_ERR_UNINDEXABLE;
    }
    return VSTR_ERR_INTERNAL;
}

template <typename F>
vstr_status wrap(F&& f) noexcept {
    try {
        f();
        return VSTR_OK;
    } catch (const vstr::error& e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return VSTR_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return VSTR_ERR_INTERNAL;
    }
}

void check_arg(bool ok, const char* msg) {
    vstr::require(ok, vstr::errc::invalid_argument, msg);
}

// Pools every descriptor in the dataset into one flat training array.
std::pair<std::vector<float>, std::size_t> pool_descriptors(const vstr_dataset* ds) {
    std::size_t dim = 0;
    std::size_t total = 0;
    for (const auto& s : ds->sets) {
        if (s.count() == 0) continue;
        if (dim == 0) dim = s.dim;
        vstr::require(s.dim == dim, vstr::errc::invalid_argument,
                      "dataset mixes descriptor dimensions");
        total += s.data.size();
    }
    vstr::require(dim > 0, vstr::errc::invalid_argument, "dataset has no descriptors");
    std::vector<float> flat;
    flat.reserve(total);
    for (const auto& s : ds->sets) flat.insert(flat.end(), s.data.begin(), s.data.end());
    return {std::move(flat), dim};
}

vstr::PipelineConfig to_config(const vstr_search_params& p) {
    vstr::PipelineConfig cfg;
    switch (p.mode) {
        case VSTR_MODE_STR: cfg.mode = vstr::SearchMode::str; break;
        case VSTR_MODE_RSTR: cfg.mode = vstr::SearchMode::rstr; break;
        case VSTR_MODE_BSTR: cfg.mode = vstr::SearchMode::bstr; break;
        case VSTR_MODE_BSTR_TFIDF: cfg.mode = vstr::SearchMode::bstr_tfidf; break;
        case VSTR_MODE_EXACT: cfg.mode = vstr::SearchMode::exact; break;
        default: check_arg(false, "unknown search mode");
    }
    cfg.k_x = p.k_x ? p.k_x : p.k_q;
    cfg.k_q = p.k_q;
    cfg.c = p.c;
    cfg.k = p.k;
    if (p.prune_query) cfg.prune_query = p.prune_query;
    if (p.prune_docs) cfg.prune_docs = p.prune_docs;
    return cfg;
}

vstr::VladVector query_vlad(const vstr_codebook* cb, const vstr_dataset* queries,
                            std::size_t query_pos) {
    check_arg(cb && queries, "codebook and queries required");
    check_arg(query_pos < queries->sets.size(), "query position out of range");
    return vstr::normalize(vstr::aggregate(queries->sets[query_pos], cb->cb));
}

} // namespace

extern "C" {

const char* vstr_last_error(void) { return g_last_error.c_str(); }

/* --- datasets -------------------------------------------------------------- */

vstr_status vstr_dataset_load(const char* path, vstr_dataset** out) {
    return wrap([&] {
        check_arg(path && out, "null argument");
        auto ds = std::make_unique<vstr_dataset>();
        ds->sets = vstr::load_descriptors(path);
        *out = ds.release();
    });
}

vstr_status vstr_dataset_save(const vstr_dataset* ds, const char* path) {
    return wrap([&] {
        check_arg(ds && path, "null argument");
        vstr::save_descriptors(ds->sets, path);
    });
}

void vstr_dataset_free(vstr_dataset* ds) { delete ds; }

size_t vstr_dataset_count(const vstr_dataset* ds) { return ds ? ds->sets.size() : 0; }

uint32_t vstr_dataset_dim(const vstr_dataset* ds) {
    if (!ds) return 0;
    for (const auto& s : ds->sets)
        if (s.count() > 0) return static_cast<uint32_t>(s.dim);
    return 0;
}

uint64_t vstr_dataset_descriptor_count(const vstr_dataset* ds) {
    if (!ds) return 0;
    uint64_t n = 0;
    for (const auto& s : ds->sets) n += s.count();
    return n;
}

const char* vstr_dataset_image_id(const vstr_dataset* ds, size_t i) {
    if (!ds || i >= ds->sets.size()) return nullptr;
    return ds->sets[i].image_id.c_str();
}

int64_t vstr_dataset_find(const vstr_dataset* ds, const char* image_id) {
    if (!ds || !image_id) return -1;
    for (size_t i = 0; i < ds->sets.size(); ++i)
        if (ds->sets[i].image_id == image_id) return static_cast<int64_t>(i);
    return -1;
}

vstr_status vstr_synth(const vstr_synth_params* params, vstr_dataset** corpus_out,
                       vstr_dataset** queries_out, vstr_groundtruth** gt_out) {
    return wrap([&] {
        check_arg(params, "null params");
        vstr::SynthParams sp;
        sp.n_images = params->images;
        sp.clusters = params->clusters;
        sp.dim = params->dim;
        sp.vocab = params->vocab;
        sp.per_image = params->per_image;
        sp.noise = params->noise;
        sp.seed = params->seed;
        auto data = vstr::synth_dataset(sp);

        if (queries_out) {
            auto qs = std::make_unique<vstr_dataset>();
            for (const auto& id : data.query_ids) {
                for (const auto& s : data.corpus)
                    if (s.image_id == id) {
                        qs->sets.push_back(s);
                        break;
                    }
            }
            *queries_out = qs.release();
        }
        if (gt_out) {
            auto gt = std::make_unique<vstr_groundtruth>();
            gt->gt = std::move(data.gt);
            *gt_out = gt.release();
        }
        if (corpus_out) {
            auto corpus = std::make_unique<vstr_dataset>();
            corpus->sets = std::move(data.corpus);
            *corpus_out = corpus.release();
        }
    });
}

/* --- ground truth ------------------------------------------------------------ */

vstr_status vstr_groundtruth_load(const char* path, vstr_groundtruth** out) {
    return wrap([&] {
        check_arg(path && out, "null argument");
        auto gt = std::make_unique<vstr_groundtruth>();
        gt->gt = vstr::GroundTruth::load(path);
        *out = gt.release();
    });
}

vstr_status vstr_groundtruth_save(const vstr_groundtruth* gt, const char* path) {
    return wrap([&] {
        check_arg(gt && path, "null argument");
        gt->gt.save(path);
    });
}

void vstr_groundtruth_free(vstr_groundtruth* gt) { delete gt; }

/* --- codebook ----------------------------------------------------------------- */

vstr_status vstr_codebook_train(const vstr_dataset* ds, uint32_t k, uint64_t seed,
                                uint32_t* iterations_out, vstr_codebook** out) {
    return wrap([&] {
        check_arg(ds && out, "null argument");
        auto [flat, dim] = pool_descriptors(ds);
        std::size_t iterations = 0;
        auto cb = std::make_unique<vstr_codebook>();
        cb->cb = vstr::train_codebook(flat, dim, k, seed, &iterations);
        if (iterations_out) *iterations_out = static_cast<uint32_t>(iterations);
        *out = cb.release();
    });
}

vstr_status vstr_codebook_save(const vstr_codebook* cb, const char* path) {
    return wrap([&] {
        check_arg(cb && path, "null argument");
        cb->cb.save(path);
    });
}

vstr_status vstr_codebook_load(const char* path, vstr_codebook** out) {
    return wrap([&] {
        check_arg(path && out, "null argument");
        auto cb = std::make_unique<vstr_codebook>();
        cb->cb = vstr::Codebook::load(path);
        *out = cb.release();
    });
}

void vstr_codebook_free(vstr_codebook* cb) { delete cb; }

uint32_t vstr_codebook_size(const vstr_codebook* cb) {
    return cb ? static_cast<uint32_t>(cb->cb.size()) : 0;
}

uint32_t vstr_codebook_dim(const vstr_codebook* cb) {
    return cb ? static_cast<uint32_t>(cb->cb.dim) : 0;
}

/* --- reference sets ------------------------------------------------------------ */

vstr_status vstr_refset_select(const vstr_dataset* ds, const vstr_codebook* cb,
                               vstr_ref_mode mode, uint32_t m, uint64_t seed, vstr_refset** out) {
    return wrap([&] {
        check_arg(ds && cb && out, "null argument");
        check_arg(mode == VSTR_REFS_WHOLE || mode == VSTR_REFS_BLOCKWISE, "unknown ref mode");
        auto vlads = vstr::encode_vlads(ds->sets, cb->cb);
        auto rs = std::make_unique<vstr_refset>();
        rs->rs = vstr::select_references(
            vlads, m,
            mode == VSTR_REFS_WHOLE ? vstr::RefMode::whole : vstr::RefMode::blockwise, seed);
        *out = rs.release();
    });
}

vstr_status vstr_refset_save(const vstr_refset* rs, const char* path) {
    return wrap([&] {
        check_arg(rs && path, "null argument");
        rs->rs.save(path);
    });
}

vstr_status vstr_refset_load(const char* path, vstr_refset** out) {
    return wrap([&] {
        check_arg(path && out, "null argument");
        auto rs = std::make_unique<vstr_refset>();
        rs->rs = vstr::ReferenceSet::load(path);
        *out = rs.release();
    });
}

void vstr_refset_free(vstr_refset* rs) { delete rs; }

uint32_t vstr_refset_size(const vstr_refset* rs) {
    return rs ? static_cast<uint32_t>(rs->rs.size()) : 0;
}

uint32_t vstr_refset_dim(const vstr_refset* rs) {
    return rs ? static_cast<uint32_t>(rs->rs.dim) : 0;
}

vstr_ref_mode vstr_refset_mode(const vstr_refset* rs) {
    return rs && rs->rs.mode == vstr::RefMode::blockwise ? VSTR_REFS_BLOCKWISE : VSTR_REFS_WHOLE;
}

uint64_t vstr_refset_seed(const vstr_refset* rs) { return rs ? rs->rs.seed : 0; }

/* --- encode export --------------------------------------------------------------- */

vstr_status vstr_encode_to_file(const vstr_dataset* ds, const vstr_codebook* cb,
                                const vstr_refset* rs, uint32_t k, const char* path,
                                uint64_t* skipped_out) {
    return wrap([&] {
        check_arg(ds && cb && rs && path, "null argument");
        auto vlads = vstr::encode_vlads(ds->sets, cb->cb);
        auto encoded = vstr::encode_corpus(vlads, rs->rs, k);
        vstr::write_documents(encoded.docs, path);
        if (skipped_out) *skipped_out = encoded.skipped.size();
    });
}

/* --- index ------------------------------------------------------------------------ */

vstr_status vstr_index_build(const vstr_dataset* ds, const vstr_codebook* cb,
                             const vstr_refset* rs, uint32_t k_x, uint32_t prune_docs,
                             vstr_index** index_out, vstr_store** store_out,
                             uint64_t* skipped_out) {
    return wrap([&] {
        check_arg(ds && cb && rs && index_out, "null argument");
        auto vlads = vstr::encode_vlads(ds->sets, cb->cb);
        auto built = vstr::build_corpus_index(
            vlads, rs->rs, k_x,
            prune_docs ? std::optional<uint32_t>(prune_docs) : std::nullopt,
            store_out != nullptr);
        auto idx = std::make_unique<vstr_index>();
        idx->idx = std::move(built.index);
        if (store_out) {
            auto st = std::make_unique<vstr_store>();
            st->st = std::move(built.store);
            *store_out = st.release();
        }
        if (skipped_out) *skipped_out = built.skipped.size();
        *index_out = idx.release();
    });
}

vstr_status vstr_index_save(const vstr_index* idx, const char* path) {
    return wrap([&] {
        check_arg(idx && path, "null argument");
        idx->idx.save(path);
    });
}

vstr_status vstr_index_load(const char* path, vstr_index** out) {
    return wrap([&] {
        check_arg(path && out, "null argument");
        auto idx = std::make_unique<vstr_index>();
        idx->idx = vstr::InvertedIndex::load(path);
        *out = idx.release();
    });
}

void vstr_index_free(vstr_index* idx) { delete idx; }

void vstr_index_stats(const vstr_index* idx, uint64_t* docs_out, uint64_t* terms_out,
                      uint64_t* postings_out) {
    if (!idx) return;
    const auto& stats = idx->idx.stats();
    if (docs_out) *docs_out = stats.doc_count;
    if (terms_out) *terms_out = stats.term_count;
    if (postings_out) *postings_out = stats.postings_count;
}

/* --- store ------------------------------------------------------------------------- */

vstr_status vstr_store_save(const vstr_store* st, const char* path) {
    return wrap([&] {
        check_arg(st && path, "null argument");
        st->st.save(path);
    });
}

vstr_status vstr_store_load(const char* path, vstr_store** out) {
    return wrap([&] {
        check_arg(path && out, "null argument");
        auto st = std::make_unique<vstr_store>();
        st->st = vstr::VladStore::load(path);
        *out = st.release();
    });
}

void vstr_store_free(vstr_store* st) { delete st; }

uint64_t vstr_store_size(const vstr_store* st) { return st ? st->st.size() : 0; }

/* --- search ------------------------------------------------------------------------- */

vstr_status vstr_search_image(const vstr_index* idx, const vstr_codebook* cb,
                              const vstr_refset* rs, const vstr_store* st,
                              const vstr_dataset* queries, size_t query_pos,
                              const vstr_search_params* params, vstr_result** out) {
    return wrap([&] {
        check_arg(params && out, "null argument");
        auto cfg = to_config(*params);
        bool exact = cfg.mode == vstr::SearchMode::exact;
        check_arg(exact || (idx && rs), "index and references required");
        auto query = query_vlad(cb, queries, query_pos);

        static const vstr::InvertedIndex empty_index;
        static const vstr::ReferenceSet empty_refs;
        auto res = std::make_unique<vstr_result>();
        res->res = vstr::search(query, idx ? idx->idx : empty_index, rs ? rs->rs : empty_refs,
                                cfg, st ? &st->st : nullptr);
        *out = res.release();
    });
}

void vstr_result_free(vstr_result* res) { delete res; }

size_t vstr_result_count(const vstr_result* res) { return res ? res->res.hits.size() : 0; }

const char* vstr_result_doc_id(const vstr_result* res, size_t i) {
    if (!res || i >= res->res.hits.size()) return nullptr;
    return res->res.hits[i].doc_id.c_str();
}

double vstr_result_score(const vstr_result* res, size_t i) {
    if (!res || i >= res->res.hits.size()) return 0.0;
    return res->res.hits[i].score;
}

double vstr_result_latency_ms(const vstr_result* res) { return res ? res->res.latency_ms : 0.0; }

/* --- evaluation ----------------------------------------------------------------------- */

vstr_status vstr_evaluate(const vstr_index* idx, const vstr_codebook* cb, const vstr_refset* rs,
                          const vstr_store* st, const vstr_dataset* queries,
                          const vstr_groundtruth* gt, const vstr_eval_params* params,
                          vstr_report** out) {
    return wrap([&] {
        check_arg(cb && queries && gt && params && out, "null argument");
        auto cfg = to_config(params->search);

        std::vector<vstr::VladVector> qv = vstr::encode_vlads(queries->sets, cb->cb);

        vstr::EvalOptions opts;
        opts.pipeline = cfg;
        opts.threads = params->threads ? params->threads : 1;
        opts.include_self = params->include_self != 0;
        opts.timing = params->timing != 0;
        opts.index_bytes = params->index_bytes;
        opts.m = rs ? rs->rs.size() : 0;

        auto rep = std::make_unique<vstr_report>();
        rep->rep = vstr::evaluate(qv, gt->gt, idx ? &idx->idx : nullptr, rs ? &rs->rs : nullptr,
                                  opts, st ? &st->st : nullptr);
        rep->text = rep->rep.text();
        rep->csv = rep->rep.csv_row();
        *out = rep.release();
    });
}

void vstr_report_free(vstr_report* rep) { delete rep; }

const char* vstr_report_text(const vstr_report* rep) { return rep ? rep->text.c_str() : ""; }

const char* vstr_report_csv_row(const vstr_report* rep) { return rep ? rep->csv.c_str() : ""; }

const char* vstr_report_csv_header(void) {
    static const std::string header = vstr::EvalReport::csv_header();
    return header.c_str();
}

double vstr_report_map(const vstr_report* rep) { return rep ? rep->rep.map : 0.0; }

} // extern "C"
