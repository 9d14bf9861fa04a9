#ifndef SPECTRAL_AUGMENT_H
#define SPECTRAL_AUGMENT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SaStatus {
  SA_STATUS_OK = 0,
  SA_STATUS_NULL_POINTER = 1,
  SA_STATUS_INVALID_UTF8 = 2,
  SA_STATUS_PARSE = 3,
  SA_STATUS_INVALID_ARGUMENT = 4,
  SA_STATUS_INVALID_GRAPH = 5,
  SA_STATUS_INVALID_PLAN = 6,
  SA_STATUS_NUMERICAL = 7,
  SA_STATUS_IO = 8,
  SA_STATUS_PANIC = 9,
} SaStatus;

typedef enum SaMode {
  SA_MODE_EDGE_DROP = 0,
  SA_MODE_EDGE_ADD = 1,
  SA_MODE_NODE_DROP = 2,
  SA_MODE_FEATURE_MASK = 3,
} SaMode;

typedef enum SaSuite {
  SA_SUITE_ALL = 0,
  SA_SUITE_THEOREMS = 1,
  SA_SUITE_GRADIENTS = 2,
  SA_SUITE_SAMPLING = 3,
} SaSuite;

// Opaque graph handle.
typedef struct SaGraph SaGraph;

// Opaque perturbation plan handle.
typedef struct SaPlan SaPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *sa_last_error_message(void);

void sa_string_free(char *s);

// Parses a graph from JSON (`{"n", "edges", "features"?, "labels"?}`).
enum SaStatus sa_graph_from_json(const char *json, struct SaGraph **out);

// Parses a graph from the `n m` header plus `i j [w]` lines format.
enum SaStatus sa_graph_from_edge_list(const char *text, struct SaGraph **out);

enum SaStatus sa_graph_to_json(const struct SaGraph *g, char **out);

void sa_graph_free(struct SaGraph *g);

// Node count, or 0 for a null handle.
uintptr_t sa_graph_num_nodes(const struct SaGraph *g);

uintptr_t sa_graph_num_edges(const struct SaGraph *g);

// Random partition graph. `labels_out` may be NULL; otherwise it must hold
// `num_class * nodes_per_class` entries.
enum SaStatus sa_generate_rpg(uintptr_t num_class,
                              uintptr_t nodes_per_class,
                              double homophily,
                              double avg_degree,
                              uint64_t seed,
                              struct SaGraph **out,
                              uintptr_t *labels_out);

enum SaStatus sa_generate_er(uintptr_t n, double p, uint64_t seed, struct SaGraph **out);

// The `k` lowest normalized-Laplacian eigenvalues into `eigenvalues_out`
// and, unless NULL, the eigenvectors row-major (`n x k`) into
// `eigenvectors_out`.
enum SaStatus sa_graph_spectrum(const struct SaGraph *g,
                                uintptr_t k,
                                double *eigenvalues_out,
                                double *eigenvectors_out);

// Uniform plan: every support entry at `min(1, budget / |support|)`.
enum SaStatus sa_plan_uniform(const struct SaGraph *g,
                              enum SaMode mode,
                              double budget,
                              struct SaPlan **out);

// Spectral-change-optimized plan: seeded initialization followed by
// `iters` projected gradient steps of size `eta`.
enum SaStatus sa_plan_optimize(const struct SaGraph *g,
                               enum SaMode mode,
                               double budget,
                               uintptr_t k,
                               double eta,
                               uintptr_t iters,
                               uint64_t seed,
                               struct SaPlan **out);

enum SaStatus sa_plan_from_json(const char *json, struct SaPlan **out);

enum SaStatus sa_plan_to_json(const struct SaPlan *p, char **out);

void sa_plan_free(struct SaPlan *p);

// Support size, or 0 for a null handle.
uintptr_t sa_plan_len(const struct SaPlan *p);

// Copies `min(len, support size)` plan values into `out`.
enum SaStatus sa_plan_values(const struct SaPlan *p, double *out, uintptr_t len);

enum SaStatus sa_plan_loss(const struct SaGraph *g,
                           const struct SaPlan *p,
                           uintptr_t k,
                           double *out);

// Gumbel-samples a mask from the plan and returns the augmented graph.
enum SaStatus sa_plan_sample(const struct SaGraph *g,
                             const struct SaPlan *p,
                             double tau,
                             uint64_t seed,
                             struct SaGraph **out);

// Spectral clustering into `k` clusters; `labels_out` holds one entry per node.
enum SaStatus sa_spectral_clustering(const struct SaGraph *g,
                                     uintptr_t k,
                                     uint64_t seed,
                                     uintptr_t *labels_out);

// Fraction of nodes whose label changes after optimally aligning `after`
// to `before`; labels must lie in `[0, k)`.
enum SaStatus sa_community_change_ratio(const uintptr_t *before,
                                        const uintptr_t *after,
                                        uintptr_t n,
                                        uintptr_t k,
                                        double *out);

// Projection onto `{s in [0,1]^len : sum(s) <= budget}`; `out` may alias
// `values`.
enum SaStatus sa_project_budget(const double *values, uintptr_t len, double budget, double *out);

// Runs a self-check suite; `passed_out` receives the overall verdict.
enum SaStatus sa_verify(enum SaSuite suite, uint64_t seed, bool *passed_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRAL_AUGMENT_H */
