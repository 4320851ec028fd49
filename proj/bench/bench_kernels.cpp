// Serial reference vs blocked OpenMP kernels on layer-sized products.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "demvc/kernels.hpp"

namespace k = demvc::kernels;

namespace {

struct Case {
  std::string name;
  std::size_t m, n, kk;
};

using Kernel = void (*)(std::span<const double>, std::span<const double>, std::span<double>,
                        std::size_t, std::size_t, std::size_t);

double best_seconds(const std::function<void()>& f, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs parallel kernel benchmark"};
  int reps = 5;
  int threads = 0;
  app.add_option("--reps", reps, "repetitions per measurement (best is reported)");
  app.add_option("--threads", threads, "thread count for the parallel kernels (0 = default)");
  CLI11_PARSE(app, argc, argv);
  k::configure_threads_from_env();
  if (threads > 0) k::set_thread_count(threads);

  // Forward and backward products of a 784-500-500-2000-10 network at batch 256.
  const std::vector<Case> cases{
      {"fwd 256x784 -> 500", 256, 500, 784},
      {"fwd 256x500 -> 2000", 256, 2000, 500},
      {"fwd 256x2000 -> 10", 256, 10, 2000},
      {"grad_w 500x784", 500, 784, 256},
      {"grad_x 256x784", 256, 784, 500},
  };
  const struct {
    const char* label;
    Kernel serial;
    Kernel parallel;
  } kernels[] = {
      {"nt", k::serial::matmul_nt, k::matmul_nt},
      {"tn", k::serial::matmul_tn, k::matmul_tn},
      {"nn", k::serial::matmul_nn, k::matmul_nn},
  };

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::printf("threads %d, best of %d\n", k::thread_count(), reps);
  std::printf("%-22s %-3s %10s %10s %8s %10s\n", "shape", "op", "serial ms", "omp ms", "speedup",
              "max |diff|");
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Case& cs = cases[c];
    const auto& kern = kernels[c < 3 ? 0 : c == 3 ? 1 : 2];
    std::vector<double> a(cs.m * cs.kk), b(cs.n * cs.kk), c1(cs.m * cs.n), c2(cs.m * cs.n);
    for (double& x : a) x = u(rng);
    for (double& x : b) x = u(rng);
    const double ts = best_seconds([&] { kern.serial(a, b, c1, cs.m, cs.n, cs.kk); }, reps);
    const double tp = best_seconds([&] { kern.parallel(a, b, c2, cs.m, cs.n, cs.kk); }, reps);
    double diff = 0.0;
    for (std::size_t i = 0; i < c1.size(); ++i) diff = std::max(diff, std::abs(c1[i] - c2[i]));
    std::printf("%-22s %-3s %10.2f %10.2f %7.2fx %10.1e\n", cs.name.c_str(), kern.label, ts * 1e3,
                tp * 1e3, ts / tp, diff);
  }

  std::vector<double> a(256 * 2000), sums1(2000), sums2(2000);
  for (double& x : a) x = u(rng);
  const double ts = best_seconds([&] { k::serial::column_sums(a, sums1, 256, 2000); }, reps);
  const double tp = best_seconds([&] { k::column_sums(a, sums2, 256, 2000); }, reps);
  double diff = 0.0;
  for (std::size_t i = 0; i < sums1.size(); ++i) diff = std::max(diff, std::abs(sums1[i] - sums2[i]));
  std::printf("%-22s %-3s %10.3f %10.3f %7.2fx %10.1e\n", "colsum 256x2000", "cs", ts * 1e3,
              tp * 1e3, ts / tp, diff);
  return 0;
}
