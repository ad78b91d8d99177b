/* vstr - permutation-based similarity search over VLAD descriptors.
 *
 * C API for the shared library. All objects are opaque handles created and
 * destroyed through these functions; every fallible call returns a
 * vstr_status, with a thread-local message available via vstr_last_error().
 * Output handles are written only on VSTR_OK.
 */

#ifndef VSTR_H
#define VSTR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VSTR_API __declspec(dllexport)
#else
#define VSTR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vstr_status {
    VSTR_OK = 0,
    VSTR_ERR_INVALID_ARGUMENT = 1,
    VSTR_ERR_IO = 2,
    VSTR_ERR_FORMAT = 3,
    VSTR_ERR_STATE = 4,
    VSTR_ERR_NOT_FOUND = 5,
    VSTR_ERR_UNINDEXABLE = 6,
    VSTR_ERR_INTERNAL = 7
} vstr_status;

typedef enum vstr_ref_mode {
    VSTR_REFS_WHOLE = 0,
    VSTR_REFS_BLOCKWISE = 1
} vstr_ref_mode;

typedef enum vstr_mode {
    VSTR_MODE_STR = 0,
    VSTR_MODE_RSTR = 1,
    VSTR_MODE_BSTR = 2,
    VSTR_MODE_BSTR_TFIDF = 3,
    VSTR_MODE_EXACT = 4
} vstr_mode;

typedef struct vstr_dataset vstr_dataset;         /* local descriptor sets */
typedef struct vstr_codebook vstr_codebook;       /* k-means vocabulary */
typedef struct vstr_refset vstr_refset;           /* reference (pivot) vectors */
typedef struct vstr_index vstr_index;             /* sealed inverted index */
typedef struct vstr_store vstr_store;             /* original-vector store */
typedef struct vstr_groundtruth vstr_groundtruth; /* query -> relevant ids */
typedef struct vstr_result vstr_result;           /* one query's ranked hits */
typedef struct vstr_report vstr_report;           /* evaluation metrics */

/* Message for the most recent failing call on this thread. */
VSTR_API const char* vstr_last_error(void);

/* --- descriptor datasets ------------------------------------------------- */

VSTR_API vstr_status vstr_dataset_load(const char* path, vstr_dataset** out);
VSTR_API vstr_status vstr_dataset_save(const vstr_dataset* ds, const char* path);
VSTR_API void vstr_dataset_free(vstr_dataset* ds);
VSTR_API size_t vstr_dataset_count(const vstr_dataset* ds);
VSTR_API uint32_t vstr_dataset_dim(const vstr_dataset* ds);
VSTR_API uint64_t vstr_dataset_descriptor_count(const vstr_dataset* ds);
VSTR_API const char* vstr_dataset_image_id(const vstr_dataset* ds, size_t i);
/* Position of an image id, or -1 if absent. */
VSTR_API int64_t vstr_dataset_find(const vstr_dataset* ds, const char* image_id);

/* Synthetic clustered dataset with ground truth (queries are the first image
 * of each cluster). Any of the three outputs may be NULL to skip it. */
typedef struct vstr_synth_params {
    uint64_t images;
    uint64_t clusters;
    uint64_t dim;
    uint64_t vocab;     /* anchor points shaping descriptor space */
    uint64_t per_image; /* descriptors per image; 0 = 4 * vocab */
    double noise;
    uint64_t seed;
} vstr_synth_params;

VSTR_API vstr_status vstr_synth(const vstr_synth_params* params, vstr_dataset** corpus_out,
                                vstr_dataset** queries_out, vstr_groundtruth** gt_out);

/* --- ground truth -------------------------------------------------------- */

VSTR_API vstr_status vstr_groundtruth_load(const char* path, vstr_groundtruth** out);
VSTR_API vstr_status vstr_groundtruth_save(const vstr_groundtruth* gt, const char* path);
VSTR_API void vstr_groundtruth_free(vstr_groundtruth* gt);

/* --- codebook ------------------------------------------------------------ */

VSTR_API vstr_status vstr_codebook_train(const vstr_dataset* ds, uint32_t k, uint64_t seed,
                                         uint32_t* iterations_out, vstr_codebook** out);
VSTR_API vstr_status vstr_codebook_save(const vstr_codebook* cb, const char* path);
VSTR_API vstr_status vstr_codebook_load(const char* path, vstr_codebook** out);
VSTR_API void vstr_codebook_free(vstr_codebook* cb);
VSTR_API uint32_t vstr_codebook_size(const vstr_codebook* cb);
VSTR_API uint32_t vstr_codebook_dim(const vstr_codebook* cb);

/* --- reference sets ------------------------------------------------------ */

VSTR_API vstr_status vstr_refset_select(const vstr_dataset* ds, const vstr_codebook* cb,
                                        vstr_ref_mode mode, uint32_t m, uint64_t seed,
                                        vstr_refset** out);
VSTR_API vstr_status vstr_refset_save(const vstr_refset* rs, const char* path);
VSTR_API vstr_status vstr_refset_load(const char* path, vstr_refset** out);
VSTR_API void vstr_refset_free(vstr_refset* rs);
VSTR_API uint32_t vstr_refset_size(const vstr_refset* rs);
VSTR_API uint32_t vstr_refset_dim(const vstr_refset* rs);
VSTR_API vstr_ref_mode vstr_refset_mode(const vstr_refset* rs);
VSTR_API uint64_t vstr_refset_seed(const vstr_refset* rs);

/* --- surrogate text export ------------------------------------------------ */

/* Writes one "doc_id TAB term:weight ..." line per indexable image.
 * skipped_out (optional) receives the number of unindexable images. */
VSTR_API vstr_status vstr_encode_to_file(const vstr_dataset* ds, const vstr_codebook* cb,
                                         const vstr_refset* rs, uint32_t k, const char* path,
                                         uint64_t* skipped_out);

/* --- index build / persistence ------------------------------------------- */

/* Encodes the corpus at depth k_x and builds a sealed index. prune_docs > 0
 * enables two-pass tf-idf document reduction. store_out may be NULL when no
 * reordering store is wanted; skipped_out (optional) counts unindexable
 * images. */
VSTR_API vstr_status vstr_index_build(const vstr_dataset* ds, const vstr_codebook* cb,
                                      const vstr_refset* rs, uint32_t k_x, uint32_t prune_docs,
                                      vstr_index** index_out, vstr_store** store_out,
                                      uint64_t* skipped_out);
VSTR_API vstr_status vstr_index_save(const vstr_index* idx, const char* path);
VSTR_API vstr_status vstr_index_load(const char* path, vstr_index** out);
VSTR_API void vstr_index_free(vstr_index* idx);
VSTR_API void vstr_index_stats(const vstr_index* idx, uint64_t* docs_out, uint64_t* terms_out,
                               uint64_t* postings_out);

VSTR_API vstr_status vstr_store_save(const vstr_store* st, const char* path);
VSTR_API vstr_status vstr_store_load(const char* path, vstr_store** out);
VSTR_API void vstr_store_free(vstr_store* st);
VSTR_API uint64_t vstr_store_size(const vstr_store* st);

/* --- search ---------------------------------------------------------------- */

typedef struct vstr_search_params {
    vstr_mode mode;
    uint32_t k_x; /* echo only (indexing depth); 0 = unknown */
    uint32_t k_q;
    uint32_t c; /* reorder candidates, rstr */
    uint32_t k; /* results */
    uint32_t prune_query; /* 0 = off */
    uint32_t prune_docs;  /* echo only */
} vstr_search_params;

/* Runs one query image (position query_pos in `queries`). `idx` and `rs` may
 * be NULL in exact mode; `st` is required for rstr/exact. */
VSTR_API vstr_status vstr_search_image(const vstr_index* idx, const vstr_codebook* cb,
                                       const vstr_refset* rs, const vstr_store* st,
                                       const vstr_dataset* queries, size_t query_pos,
                                       const vstr_search_params* params, vstr_result** out);
VSTR_API void vstr_result_free(vstr_result* res);
VSTR_API size_t vstr_result_count(const vstr_result* res);
VSTR_API const char* vstr_result_doc_id(const vstr_result* res, size_t i);
VSTR_API double vstr_result_score(const vstr_result* res, size_t i);
VSTR_API double vstr_result_latency_ms(const vstr_result* res);

/* --- evaluation ------------------------------------------------------------ */

typedef struct vstr_eval_params {
    vstr_search_params search;
    uint32_t threads;      /* 0 or 1 = single-threaded */
    int include_self;      /* keep the query doc in its own ranking */
    int timing;            /* 0 zeroes latency fields for reproducible output */
    uint64_t index_bytes;  /* echoed into the report */
} vstr_eval_params;

VSTR_API vstr_status vstr_evaluate(const vstr_index* idx, const vstr_codebook* cb,
                                   const vstr_refset* rs, const vstr_store* st,
                                   const vstr_dataset* queries, const vstr_groundtruth* gt,
                                   const vstr_eval_params* params, vstr_report** out);
VSTR_API void vstr_report_free(vstr_report* rep);
VSTR_API const char* vstr_report_text(const vstr_report* rep);
VSTR_API const char* vstr_report_csv_row(const vstr_report* rep);
VSTR_API const char* vstr_report_csv_header(void);
VSTR_API double vstr_report_map(const vstr_report* rep);

#ifdef __cplusplus
}
#endif

#endif /* VSTR_H */
