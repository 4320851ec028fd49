#include "demvc/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

namespace demvc::kernels {

namespace {

constexpr std::size_t kRowBlock = 32;
constexpr std::size_t kColBlock = 256;
constexpr std::size_t kDepthBlock = 128;
// Products smaller than this many multiply-adds run on the calling thread.
constexpr std::size_t kParallelWork = 1 << 16;

// Computes rows [i0, i1) x cols [j0, j1) of c = a * b. Each element is
// accumulated over the full depth in ascending order.
void nn_tile(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
             std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) {
  for (std::size_t i = i0; i < i1; ++i) std::fill(c + i * n + j0, c + i * n + j1, 0.0);
  for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
    const std::size_t p1 = std::min(k, p0 + kDepthBlock);
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      double* c0 = c + i * n;
      double* c1 = c0 + n;
      double* c2 = c1 + n;
      double* c3 = c2 + n;
      for (std::size_t p = p0; p < p1; ++p) {
        const double a0 = a[i * k + p];
        const double a1 = a[(i + 1) * k + p];
        const double a2 = a[(i + 2) * k + p];
        const double a3 = a[(i + 3) * k + p];
        const double* bp = b + p * n;
#pragma omp simd
        for (std::size_t j = j0; j < j1; ++j) {
          const double bv = bp[j];
          c0[j] += a0 * bv;
          c1[j] += a1 * bv;
          c2[j] += a2 * bv;
          c3[j] += a3 * bv;
        }
      }
    }
    for (; i < i1; ++i) {
      double* ci = c + i * n;
      for (std::size_t p = p0; p < p1; ++p) {
        const double av = a[i * k + p];
        const double* bp = b + p * n;
#pragma omp simd
        for (std::size_t j = j0; j < j1; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

void transpose(const double* src, double* dst, std::size_t rows, std::size_t cols) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
  }
}

}  // namespace

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k) {
  const std::size_t row_blocks = (m + kRowBlock - 1) / kRowBlock;
  const std::size_t col_blocks = (n + kColBlock - 1) / kColBlock;
  const bool parallel = m * n * k > kParallelWork;
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
  for (std::size_t rb = 0; rb < row_blocks; ++rb) {
    for (std::size_t cb = 0; cb < col_blocks; ++cb) {
      const std::size_t i0 = rb * kRowBlock;
      const std::size_t j0 = cb * kColBlock;
      nn_tile(a.data(), b.data(), c.data(), n, k, i0, std::min(m, i0 + kRowBlock), j0,
              std::min(n, j0 + kColBlock));
    }
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k) {
  std::vector<double> bt(n * k);
  transpose(b.data(), bt.data(), n, k);
  matmul_nn(a, bt, c, m, n, k);
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t n, std::size_t k) {
  std::vector<double> at(m * k);
  transpose(a.data(), at.data(), k, m);
  matmul_nn(at, b, c, m, n, k);
}

void column_sums(std::span<const double> a, std::span<double> out, std::size_t rows,
                 std::size_t cols) {
  const std::size_t col_blocks = (cols + kColBlock - 1) / kColBlock;
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (std::size_t cb = 0; cb < col_blocks; ++cb) {
    const std::size_t j0 = cb * kColBlock;
    const std::size_t j1 = std::min(cols, j0 + kColBlock);
    std::fill(out.begin() + j0, out.begin() + j1, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* ai = a.data() + i * cols;
#pragma omp simd
      for (std::size_t j = j0; j < j1; ++j) out[j] += ai[j];
    }
  }
}

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n) { omp_set_num_threads(std::max(1, n)); }

void configure_threads_from_env() {
  if (const char* env = std::getenv("DEMVC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) set_thread_count(n);
    } catch (const std::exception&) {
      // Unparseable values leave the OpenMP default in place.
    }
  }
}

}  // namespace demvc::kernels
