// Timing comparison of the OpenMP kernels against their serial references.
// Sizes mimic batched message passing: tall skinny feature matrices and
// segment reductions over many small neighborhoods. Results are checked for
// bit-equality while timing, so a run also re-verifies determinism.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include "gdn/kernels.hpp"

using namespace gdn::kernels;
using clk = std::chrono::steady_clock;

namespace {

std::vector<double> randu(size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    auto t0 = clk::now();
    f();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(clk::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-28s %10.2f ms %10.2f ms %7.2fx   %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, equal ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main() {
  std::mt19937_64 rng(99);
  const int reps = 5;
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  {  // dense product, roughly a wide layer on a large node batch
    const int m = 1536, k = 512, n = 256;
    auto a = randu(size_t(m) * k, rng), b = randu(size_t(k) * n, rng);
    std::vector<double> c1(size_t(m) * n), c2(size_t(m) * n);
    double s = best_of(reps, [&] { serial::matmul(a.data(), b.data(), c1.data(), m, k, n); });
    double p = best_of(reps, [&] { matmul(a.data(), b.data(), c2.data(), m, k, n); });
    row("matmul 1536x512x256", s, p, std::memcmp(c1.data(), c2.data(), c1.size() * 8) == 0);
  }

  const int rows_ = 400000, d = 64, segs = 40000;
  auto src = randu(size_t(rows_) * d, rng);
  std::vector<int> keys(rows_);
  for (int i = 0; i < rows_; ++i) keys[size_t(i)] = int(rng() % unsigned(segs));
  RowGroups groups = group_rows(keys.data(), rows_, segs);

  {
    std::vector<int> ids(rows_);
    for (int i = 0; i < rows_; ++i) ids[size_t(i)] = int(rng() % unsigned(rows_));
    std::vector<double> d1(size_t(rows_) * d), d2(size_t(rows_) * d);
    double s = best_of(reps, [&] { serial::gather_rows(src.data(), ids.data(), d1.data(), rows_, d); });
    double p = best_of(reps, [&] { gather_rows(src.data(), ids.data(), d2.data(), rows_, d); });
    row("gather 400k x 64", s, p, std::memcmp(d1.data(), d2.data(), d1.size() * 8) == 0);
  }
  {
    std::vector<double> d1(size_t(segs) * d), d2(size_t(segs) * d);
    double s = best_of(reps, [&] { serial::segment_sum(src.data(), keys.data(), d1.data(), rows_, d, segs); });
    double p = best_of(reps, [&] { segment_sum(src.data(), d2.data(), d, groups); });
    row("segment sum 400k -> 40k", s, p, std::memcmp(d1.data(), d2.data(), d1.size() * 8) == 0);
  }
  {
    std::vector<double> d1(size_t(segs) * d), d2(size_t(segs) * d);
    double s = best_of(reps, [&] { serial::segment_mean(src.data(), keys.data(), d1.data(), rows_, d, segs); });
    double p = best_of(reps, [&] { segment_mean(src.data(), d2.data(), d, groups); });
    row("segment mean 400k -> 40k", s, p, std::memcmp(d1.data(), d2.data(), d1.size() * 8) == 0);
  }
  {
    std::vector<double> d1(size_t(segs) * d), d2(size_t(segs) * d);
    std::vector<int> a1(size_t(segs) * d), a2(size_t(segs) * d);
    double s = best_of(reps, [&] { serial::segment_max(src.data(), keys.data(), d1.data(), a1.data(), rows_, d, segs); });
    double p = best_of(reps, [&] { segment_max(src.data(), d2.data(), a2.data(), d, groups); });
    bool eq = std::memcmp(d1.data(), d2.data(), d1.size() * 8) == 0 &&
              std::memcmp(a1.data(), a2.data(), a1.size() * 4) == 0;
    row("segment max 400k -> 40k", s, p, eq);
  }
  {
    std::vector<double> d1(size_t(rows_) * d), d2(size_t(rows_) * d);
    double s = best_of(reps, [&] { serial::segment_softmax(src.data(), keys.data(), d1.data(), rows_, d, segs); });
    double p = best_of(reps, [&] { segment_softmax(src.data(), d2.data(), d, groups); });
    row("segment softmax 400k", s, p, std::memcmp(d1.data(), d2.data(), d1.size() * 8) == 0);
  }
  {
    std::vector<double> d1(size_t(segs) * d, 0.0), d2(size_t(segs) * d, 0.0);
    double s = best_of(reps, [&] {
      std::fill(d1.begin(), d1.end(), 0.0);
      serial::scatter_add_rows(src.data(), keys.data(), d1.data(), rows_, d);
    });
    double p = best_of(reps, [&] {
      std::fill(d2.begin(), d2.end(), 0.0);
      scatter_add_rows(src.data(), d2.data(), d, groups);
    });
    row("scatter add 400k -> 40k", s, p, std::memcmp(d1.data(), d2.data(), d1.size() * 8) == 0);
  }
  return 0;
}
