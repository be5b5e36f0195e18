#include <stdio.h>

#include "kpm/kpm_api.h"

int main(void) {
    kpm_graph* g = NULL;
    size_t n = 0;
    size_t nnz = 0;
    if (kpm_graph_generate("star", 6, &g) != KPM_OK) {
        fprintf(stderr, "%s\n", kpm_last_error());
        return 1;
    }
    kpm_graph_info(g, &n, &nnz);
    kpm_graph_free(g);
    return n == 6 && nnz == 10 ? 0 : 1;
}
