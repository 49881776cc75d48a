#ifndef PULSEPQC_H
#define PULSEPQC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PqcStatus {
  PQC_STATUS_OK = 0,
  PQC_STATUS_NULL_POINTER = 1,
  PQC_STATUS_INVALID_ARGUMENT = 2,
  PQC_STATUS_PARSE = 3,
  PQC_STATUS_DIMENSION_MISMATCH = 4,
  PQC_STATUS_BUFFER_TOO_SMALL = 5,
  PQC_STATUS_PANIC = 6,
} PqcStatus;

typedef enum PqcRotations {
  PQC_ROTATIONS_RY = 0,
  PQC_ROTATIONS_RY_RZ = 1,
} PqcRotations;

typedef enum PqcEntangler {
  PQC_ENTANGLER_CNOT = 0,
  // Bare CR tone calibrated to a π/4 ZX rotation.
  PQC_ENTANGLER_CR_ANGLE = 1,
  // Bare CR tone of 150 ns.
  PQC_ENTANGLER_CR_DURATION = 2,
} PqcEntangler;

// Opaque ansatz handle.
typedef struct PqcAnsatz PqcAnsatz;

// Opaque Pauli-sum handle.
typedef struct PqcHamiltonian PqcHamiltonian;

// CR Hamiltonian coefficients in MHz.
typedef struct PqcCrCoefficients {
  double zi;
  double zx;
  double zy;
  double zz;
  double ix;
  double iy;
  double iz;
} PqcCrCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the buffer size needed for the full message.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t pqc_last_error(char *buf, size_t len);

// NUL-terminated library version. The pointer is static.
const char *pqc_version(void);

// Device-average CR coefficients.
struct PqcCrCoefficients pqc_default_coefficients(void);

// `exp(−iHt)` for a CR tone of `duration_ns`, written row-major into `out`
// as 16 interleaved `(re, im)` pairs. `out_len` must be at least 32.
//
// # Safety
// `coefficients` must point to a valid struct; `out` to `out_len` doubles.
enum PqcStatus pqc_cr_unitary(const struct PqcCrCoefficients *coefficients,
                              double duration_ns,
                              double *out,
                              size_t out_len);

// Linear-chain ansatz with `layers` layers plus a trailing rotation layer.
// `coefficients` may be null, meaning the device average; it is ignored
// for CNOT.
//
// # Safety
// `coefficients` must be null or valid; `out` must be writable.
enum PqcStatus pqc_ansatz_new(size_t n_qubits,
                              size_t layers,
                              enum PqcRotations rotations,
                              enum PqcEntangler entangler,
                              const struct PqcCrCoefficients *coefficients,
                              struct PqcAnsatz **out);

// # Safety
// `ansatz` must be null or a handle from [`pqc_ansatz_new`] not yet freed.
void pqc_ansatz_free(struct PqcAnsatz *ansatz);

// Number of rotation angles, or 0 for a null handle.
//
// # Safety
// `ansatz` must be null or a live handle.
size_t pqc_ansatz_parameter_count(const struct PqcAnsatz *ansatz);

// Number of qubits, or 0 for a null handle.
//
// # Safety
// `ansatz` must be null or a live handle.
size_t pqc_ansatz_qubit_count(const struct PqcAnsatz *ansatz);

// Prepares the state for `params` and writes its `2^n` amplitudes as
// interleaved `(re, im)` pairs; `out_len` must be at least `2·2^n`.
//
// # Safety
// Pointers must be valid for the given lengths.
enum PqcStatus pqc_ansatz_prepare_state(const struct PqcAnsatz *ansatz,
                                        const double *params,
                                        size_t n_params,
                                        double *out,
                                        size_t out_len);

// Parses a Pauli-sum text (`<coefficient> <pauli string>` per line).
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum PqcStatus pqc_hamiltonian_parse(const char *text, struct PqcHamiltonian **out);

// # Safety
// `h` must be null or a handle from [`pqc_hamiltonian_parse`] not yet freed.
void pqc_hamiltonian_free(struct PqcHamiltonian *h);

// # Safety
// `h` must be null or a live handle.
size_t pqc_hamiltonian_qubit_count(const struct PqcHamiltonian *h);

// Exact `⟨ψ(params)|H|ψ(params)⟩`.
//
// # Safety
// Handles must be live; `params` valid for `n_params`; `value` writable.
enum PqcStatus pqc_expectation(const struct PqcAnsatz *ansatz,
                               const struct PqcHamiltonian *h,
                               const double *params,
                               size_t n_params,
                               double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PULSEPQC_H */
