#ifndef QFI_LAB_H
#define QFI_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QfiHamiltonianKind {
  QFI_HAMILTONIAN_KIND_H1 = 0,
  QFI_HAMILTONIAN_KIND_H2 = 1,
  QFI_HAMILTONIAN_KIND_EFFECTIVE_LINEAR_Y = 2,
  QFI_HAMILTONIAN_KIND_EFFECTIVE_LINEAR_Z = 3,
  QFI_HAMILTONIAN_KIND_Z_DRIFT = 4,
} QfiHamiltonianKind;

typedef enum QfiStatus {
  QFI_STATUS_OK = 0,
  QFI_STATUS_NULL_POINTER = 1,
  QFI_STATUS_INVALID_ARGUMENT = 2,
  QFI_STATUS_RESOLUTION = 3,
  QFI_STATUS_NUMERICAL_DERIVATIVE = 4,
  QFI_STATUS_UNKNOWN_FORMULA = 5,
  QFI_STATUS_PANIC = 6,
} QfiStatus;

// Opaque control sequence.
typedef struct QfiControlSequence QfiControlSequence;

// Opaque signal Hamiltonian.
typedef struct QfiHamiltonian QfiHamiltonian;

// Row-major 2x2 complex matrix: entry `(r, c)` is `re[2r+c] + i·im[2r+c]`.
typedef struct QfiMat2 {
  double re[4];
  double im[4];
} QfiMat2;

// Parameters of a closed-form FI expression; unused fields are ignored.
typedef struct QfiFormulaParams {
  double rabi;
  double frequency;
  double detuning;
  double time;
  double tau;
  uint32_t k;
} QfiFormulaParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qfi_version(void);

// Copies the calling thread's last error message into `buf` (truncated,
// always NUL-terminated when `len > 0`) and returns the full message
// length excluding the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t qfi_last_error_message(char *buf, size_t len);

// Creates a signal Hamiltonian. For `ZDrift`, `frequency` is the drift.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to be
// released with [`qfi_hamiltonian_free`].
enum QfiStatus qfi_hamiltonian_new(enum QfiHamiltonianKind kind,
                                   double rabi,
                                   double frequency,
                                   double phase,
                                   struct QfiHamiltonian **out);

// # Safety
// `h` must be null or a handle from [`qfi_hamiltonian_new`] not yet freed.
void qfi_hamiltonian_free(struct QfiHamiltonian *h);

// Free evolution in the frame of `frame_drift·σZ`.
//
// # Safety
// `out` must be a valid pointer.
enum QfiStatus qfi_control_free_evolution(double frame_drift, struct QfiControlSequence **out);

// Y π pulses every `interval` in the frame of `frame_drift·σZ`.
//
// # Safety
// `out` must be a valid pointer.
enum QfiStatus qfi_control_method1(double rabi,
                                   double frame_drift,
                                   double interval,
                                   double total_time,
                                   struct QfiControlSequence **out);

// X π pulses every `(2k+1)π/(2Ω)`.
//
// # Safety
// `out` must be a valid pointer.
enum QfiStatus qfi_control_method2(double rabi_estimate,
                                   uint32_t k,
                                   double total_time,
                                   struct QfiControlSequence **out);

// X π pulses at `(2N+1)π/(4ω′)` for the `σZ` signal.
//
// # Safety
// `out` must be a valid pointer.
enum QfiStatus qfi_control_h2_train(double reference,
                                    double total_time,
                                    struct QfiControlSequence **out);

// # Safety
// `seq` must be a live handle and `out` a valid pointer.
enum QfiStatus qfi_control_pulse_count(const struct QfiControlSequence *seq, size_t *out);

// # Safety
// `seq` must be null or a handle not yet freed.
void qfi_control_free(struct QfiControlSequence *seq);

// `exp(−i·angle·n̂·σ)` for the axis `(nx, ny, nz)`.
//
// # Safety
// `out` must be a valid pointer.
enum QfiStatus qfi_pauli_exp(double nx, double ny, double nz, double angle, struct QfiMat2 *out);

// Propagator at `total_time` in the frame of `seq`, using
// `steps_per_segment` midpoint steps between pulses.
//
// # Safety
// `h` and `seq` must be live handles and `out` a valid pointer.
enum QfiStatus qfi_evolve(const struct QfiHamiltonian *h,
                          const struct QfiControlSequence *seq,
                          double total_time,
                          size_t steps_per_segment,
                          struct QfiMat2 *out);

// Generator `i U†∂U/∂ω` of the frequency at `total_time`, with
// integration steps no longer than `max_step`.
//
// # Safety
// `h` and `seq` must be live handles and `out` a valid pointer.
enum QfiStatus qfi_generator(const struct QfiHamiltonian *h,
                             const struct QfiControlSequence *seq,
                             double total_time,
                             double max_step,
                             struct QfiMat2 *out);

// Maximum QFI `(λmax − λmin)²` of a Hermitian generator.
//
// # Safety
// `generator` and `out` must be valid pointers.
enum QfiStatus qfi_max_qfi(const struct QfiMat2 *generator, double *out);

// Evaluates a closed-form FI expression by its string id, e.g.
// `"method2"` or `"segmented_no_control"`.
//
// # Safety
// `formula` must be a NUL-terminated string; `params` and `out` must be
// valid pointers.
enum QfiStatus qfi_closed_form(const char *formula,
                               const struct QfiFormulaParams *params,
                               double *out);

// Root of `tan x = 2x` in `(0, π/2)`.
//
// # Safety
// `out` must be a valid pointer.
enum QfiStatus qfi_optimal_x(double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFI_LAB_H */
