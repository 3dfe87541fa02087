#include <stdio.h>
#include <string.h>
#include "keyrace.h"

#define CHECK(expr)                                                   \
    do {                                                              \
        if (!(expr)) {                                                \
            const char *m = kr_last_error_message();                  \
            fprintf(stderr, "failed: %s (%s)\n", #expr, m ? m : "");  \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    double p = 0.0;
    CHECK(kr_chi_square_p_value(2.0, 2, &p) == KR_STATUS_OK);
    CHECK(p > 0.3678794411 && p < 0.3678794412);

    KrSampler *s = NULL;
    CHECK(kr_sampler_new(KR_FAMILY_CANONICAL, 1.0, 0.0, &s) == KR_STATUS_OK);
    CHECK(kr_sampler_add_row(s, "g", "only", 2.0) == KR_STATUS_OK);
    size_t groups = 0;
    CHECK(kr_sampler_run(s, 1, 0, &groups) == KR_STATUS_OK && groups == 1);
    char label[16];
    size_t needed = 0;
    double key = 0.0;
    CHECK(kr_sampler_winner(s, "g", label, sizeof label, &needed, &key) == KR_STATUS_OK);
    CHECK(strcmp(label, "only") == 0 && needed == 5 && key > 0.0 && key < 1.0);
    kr_sampler_free(s);

    KrDynamic *d = NULL;
    enum KrUpdateCase c;
    CHECK(kr_dynamic_new(KR_FAMILY_EXP_MIN, 1.0, 0.0, 0, &d) == KR_STATUS_OK);
    CHECK(kr_dynamic_upsert(d, "g", "a", 1.0, &c) == KR_STATUS_OK && c == KR_UPDATE_CASE_NEW_WINNER);
    CHECK(kr_dynamic_delete(d, "g", "zz", &c) == KR_STATUS_NOT_FOUND);
    CHECK(kr_last_error_message() != NULL);
    kr_dynamic_free(d);

    const char *names[] = {"a", "b", "c"};
    double weights[] = {1.0, 2.0, 3.0};
    KrWeightTable *t = NULL;
    size_t idx = 0;
    CHECK(kr_weight_table_new(names, weights, 3, &t) == KR_STATUS_OK);
    CHECK(kr_weight_table_inverse(t, 0.4, true, &idx) == KR_STATUS_OK && idx == 1);
    kr_weight_table_free(t);

    puts("ok");
    return 0;
}
