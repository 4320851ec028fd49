#pragma once

#include <cstddef>
#include <span>

// Dense matrix products used by the layers. All matrices are row-major.
//
// Two implementations share one interface: `serial` is the plain triple-loop
// reference kept for testing, and the unqualified versions are blocked and
// OpenMP-parallel. Every output element of the parallel kernels is reduced in
// a fixed order that does not depend on the thread count, so results are
// bit-reproducible across DEMVC_THREADS settings. They are not bit-identical
// to the serial reference (different summation order); tests compare the two
// with a tolerance.
namespace demvc::kernels {

// c[m x n] = a[m x k] * b[k x n]
void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k);

// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k);

// out[j] = sum_i a[i x n][j]; column sums of a row-major matrix.
void column_sums(std::span<const double> a, std::span<double> out, std::size_t rows,
                 std::size_t cols);

namespace serial {

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k);
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k);
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k);
void column_sums(std::span<const double> a, std::span<double> out, std::size_t rows,
                 std::size_t cols);

}  // namespace serial

// Number of threads the parallel kernels use. Honors DEMVC_THREADS.
int thread_count();
void set_thread_count(int n);
// Reads DEMVC_THREADS from the environment, if set, and applies it.
void configure_threads_from_env();

}  // namespace demvc::kernels
