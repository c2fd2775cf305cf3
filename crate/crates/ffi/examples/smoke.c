/* Build: cargo build -p maniscope-ffi --release
 *        cc -Icrates/ffi/include crates/ffi/examples/smoke.c \
 *           target/release/libmaniscope_ffi.a -lpthread -ldl -lm -o smoke */
#include <stdio.h>
#include "maniscope.h"

int main(void) {
    const float rows[] = {
        1.0f, 0.0f, 0.0f,
        0.98f, 0.2f, 0.0f,
        0.92f, 0.39f, 0.0f,
        0.95f, 0.0f, 0.31f,
        0.8f, 0.6f, 0.0f,
    };
    const float query[] = {1.0f, 0.05f, 0.0f};
    MsCorpus *corpus = NULL;
    MsStatus st = ms_corpus_from_vectors(rows, 5, 3, &corpus);
    if (st != MS_STATUS_OK) {
        fprintf(stderr, "load failed (%d): %s\n", st, ms_last_error_message());
        return 1;
    }

    MsRerankConfig cfg = ms_rerank_config_default();
    cfg.k = 2;
    size_t idx[5], n = 0;
    double scores[5];
    st = ms_search(corpus, query, 3, 5, &cfg, idx, scores, 5, &n);
    if (st != MS_STATUS_OK) {
        fprintf(stderr, "search failed (%d): %s\n", st, ms_last_error_message());
        ms_corpus_free(corpus);
        return 1;
    }
    printf("maniscope %s\n", ms_version());
    for (size_t i = 0; i < n; i++)
        printf("%zu\t%s\t%.6f\n", i + 1, ms_corpus_id(corpus, idx[i]), scores[i]);

    st = ms_search(corpus, query, 2, 5, &cfg, idx, scores, 5, &n);
    printf("bad dim -> %d: %s\n", st, ms_last_error_message());
    ms_corpus_free(corpus);
    return st == MS_STATUS_DIMENSION_MISMATCH ? 0 : 1;
}
