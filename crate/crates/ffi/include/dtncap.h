#ifndef DTNCAP_H
#define DTNCAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DtnStatus {
  DTN_STATUS_OK = 0,
  // A parameter violates a model invariant.
  DTN_STATUS_VALIDATION = 1,
  // A numeric argument lies outside the function's domain.
  DTN_STATUS_DOMAIN = 2,
  // A node or contact index is out of range.
  DTN_STATUS_OUT_OF_RANGE = 3,
  // A recorded broadcast failed its journey check.
  DTN_STATUS_VERIFICATION = 4,
  DTN_STATUS_NULL_POINTER = 5,
  // Internal panic caught at the boundary.
  DTN_STATUS_PANIC = 6,
  DTN_STATUS_RUNTIME = 7,
} DtnStatus;

typedef struct DtnLog DtnLog;

typedef struct DtnScenario DtnScenario;

typedef struct DtnTrace DtnTrace;

typedef struct DtnBound {
  double capacity_y;
  double gamma;
  // NaN when the bound is infinite.
  double rho_star;
  double theta_star;
  // `+inf` when the bound is infinite.
  double speed_upper;
  bool finite;
  // `speed_upper * capacity_y`.
  double capacity_product;
} DtnBound;

typedef struct DtnContact {
  uintptr_t node_a;
  uintptr_t node_b;
  double t_begin;
  double t_end;
} DtnContact;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the next failing call.
const char *dtn_last_error(void);

// Library version as a static NUL-terminated string.
const char *dtn_version(void);

enum DtnStatus dtn_scenario_new(uintptr_t n,
                                double side,
                                double range,
                                double rate,
                                double speed,
                                double tau,
                                struct DtnScenario **out);

// # Safety
// `scenario` must be NULL or a handle from [`dtn_scenario_new`] not yet freed.
void dtn_scenario_free(struct DtnScenario *scenario);

// Mean number of nodes within range, `pi nu R^2`.
enum DtnStatus dtn_scenario_mean_degree(const struct DtnScenario *scenario, double *out);

// Speed upper bound for capacity `y`.
enum DtnStatus dtn_bound_speed(const struct DtnScenario *scenario, double y, struct DtnBound *out);

// Capacity below which the speed bound is infinite (0 when it never is).
enum DtnStatus dtn_critical_capacity(const struct DtnScenario *scenario, double *out);

// `P(T > t)` for straight-line motion.
enum DtnStatus dtn_meeting_duration_tail(double t, double speed, double range, double *out);

// Density of the meeting duration; `+inf` at the singular point `t = R/v`.
enum DtnStatus dtn_meeting_duration_pdf(double t, double speed, double range, double *out);

// Simulates one replication and records its contacts over `[0, horizon]`.
enum DtnStatus dtn_trace_new(const struct DtnScenario *scenario,
                             double horizon,
                             uint64_t seed,
                             uint32_t replication,
                             struct DtnTrace **out);

// # Safety
// `trace` must be NULL or a handle from [`dtn_trace_new`] not yet freed.
void dtn_trace_free(struct DtnTrace *trace);

enum DtnStatus dtn_trace_contact_count(const struct DtnTrace *trace, uintptr_t *out);

// Contact `index` in `(t_begin, node_a, node_b)` order.
enum DtnStatus dtn_trace_contact(const struct DtnTrace *trace,
                                 uintptr_t index,
                                 struct DtnContact *out);

// Capacity-constrained broadcast from `source` at `emit_time` over the trace.
enum DtnStatus dtn_epidemic_run(const struct DtnTrace *trace,
                                double y,
                                uintptr_t source,
                                double emit_time,
                                struct DtnLog **out);

// # Safety
// `log` must be NULL or a handle from [`dtn_epidemic_run`] not yet freed.
void dtn_log_free(struct DtnLog *log);

enum DtnStatus dtn_log_informed_count(const struct DtnLog *log, uintptr_t *out);

// Informed time of `node`; `+inf` when never reached.
enum DtnStatus dtn_log_informed_time(const struct DtnLog *log, uintptr_t node, double *out);

// Distance from the source's emit position at which `node` was informed; NaN when never reached.
enum DtnStatus dtn_log_distance(const struct DtnLog *log, uintptr_t node, double *out);

// Re-checks every journey in `log` against the contacts of `trace`.
enum DtnStatus dtn_log_verify(const struct DtnLog *log, const struct DtnTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DTNCAP_H */
