#pragma once
// Arithmetic kernels behind the hot loops (MLP dots, DFT sums, k-means
// distances). Each kernel has a scalar reference implementation and SIMD
// variants (AVX2 on x86-64, NEON on aarch64) selected once at startup.
//
// Reduction contract: dot/sqdist accumulate into 8 independent lanes,
// lane k taking elements i with i % 8 == k, and the lanes are combined
// left-to-right at the end. All backends follow the same order and the
// project builds with -ffp-contract=off, so scalar and SIMD results are
// bit-identical. Equivalence tests assert exact equality.

#include <cstddef>
#include <string>

namespace cpsw::kernels {

enum class Backend { scalar, avx2, neon };

// Best supported backend, or the one named in CPSW_KERNELS
// (scalar|avx2|neon). Decided on first use, stable afterwards.
Backend active_backend();
const char* backend_name(Backend b);
bool backend_supported(Backend b);

// Test hook. Throws std::runtime_error if unsupported on this CPU.
void force_backend(Backend b);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// sum_i (a[i] - b[i])^2
double sqdist(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
double sqdist_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_available();
double dot_avx2(const double* a, const double* b, std::size_t n);
double sqdist_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
#endif
#if defined(__aarch64__)
double dot_neon(const double* a, const double* b, std::size_t n);
double sqdist_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
#endif
} // namespace detail

} // namespace cpsw::kernels
