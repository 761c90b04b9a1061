#include "gdn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace gdn::kernels {

namespace {
// Below this many scalar operations the parallel-for is not worth spawning.
constexpr long kGrain = 16384;
}  // namespace

RowGroups group_rows(const int* keys, int n, int num_keys) {
  RowGroups g;
  g.offsets.assign(static_cast<size_t>(num_keys) + 1, 0);
  for (int r = 0; r < n; ++r) g.offsets[keys[r] + 1]++;
  for (int s = 0; s < num_keys; ++s) g.offsets[s + 1] += g.offsets[s];
  g.members.resize(n);
  std::vector<int> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (int r = 0; r < n; ++r) g.members[cursor[keys[r]]++] = r;
  return g;
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  const long work = static_cast<long>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > kGrain)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    std::memset(ci, 0, sizeof(double) * n);
    const double* ai = a + static_cast<size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const double aik = ai[kk];
      const double* bk = b + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

void gather_rows(const double* src, const int* ids, double* dst, int n_ids,
                 int d) {
  const long work = static_cast<long>(n_ids) * d;
#pragma omp parallel for schedule(static) if (work > kGrain)
  for (int i = 0; i < n_ids; ++i)
    std::memcpy(dst + static_cast<size_t>(i) * d,
                src + static_cast<size_t>(ids[i]) * d, sizeof(double) * d);
}

void scatter_add_rows(const double* src, double* dst, int d,
                      const RowGroups& by_id) {
  const int num = by_id.num_groups();
  const long work = static_cast<long>(by_id.members.size()) * d;
#pragma omp parallel for schedule(static) if (work > kGrain)
  for (int s = 0; s < num; ++s) {
    double* out = dst + static_cast<size_t>(s) * d;
    for (int p = by_id.offsets[s]; p < by_id.offsets[s + 1]; ++p) {
      const double* row = src + static_cast<size_t>(by_id.members[p]) * d;
      for (int j = 0; j < d; ++j) out[j] += row[j];
    }
  }
}

void segment_sum(const double* src, double* dst, int d, const RowGroups& seg) {
  std::memset(dst, 0, sizeof(double) * seg.num_groups() * d);
  scatter_add_rows(src, dst, d, seg);
}

void segment_mean(const double* src, double* dst, int d, const RowGroups& seg) {
  segment_sum(src, dst, d, seg);
  const int num = seg.num_groups();
#pragma omp parallel for schedule(static) if (static_cast<long>(num) * d > kGrain)
  for (int s = 0; s < num; ++s) {
    const int c = seg.count(s);
    if (c <= 1) continue;
    double* out = dst + static_cast<size_t>(s) * d;
    for (int j = 0; j < d; ++j) out[j] /= c;
  }
}

void segment_max(const double* src, double* dst, int* argmax, int d,
                 const RowGroups& seg) {
  const int num = seg.num_groups();
  const long work = static_cast<long>(seg.members.size()) * d;
#pragma omp parallel for schedule(static) if (work > kGrain)
  for (int s = 0; s < num; ++s) {
    double* out = dst + static_cast<size_t>(s) * d;
    int* arg = argmax + static_cast<size_t>(s) * d;
    for (int j = 0; j < d; ++j) {
      out[j] = 0.0;
      arg[j] = -1;
    }
    for (int p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p) {
      const int r = seg.members[p];
      const double* row = src + static_cast<size_t>(r) * d;
      for (int j = 0; j < d; ++j) {
        // first maximal member wins ties
        if (arg[j] < 0 || row[j] > out[j]) {
          out[j] = row[j];
          arg[j] = r;
        }
      }
    }
  }
}

void segment_softmax(const double* src, double* dst, int d,
                     const RowGroups& seg) {
  const int num = seg.num_groups();
  const long work = static_cast<long>(seg.members.size()) * d;
#pragma omp parallel for schedule(static) if (work > kGrain)
  for (int s = 0; s < num; ++s) {
    for (int j = 0; j < d; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p)
        mx = std::max(mx, src[static_cast<size_t>(seg.members[p]) * d + j]);
      double z = 0.0;
      for (int p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p) {
        const size_t idx = static_cast<size_t>(seg.members[p]) * d + j;
        dst[idx] = std::exp(src[idx] - mx);
        z += dst[idx];
      }
      for (int p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p)
        dst[static_cast<size_t>(seg.members[p]) * d + j] /= z;
    }
  }
}

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    std::memset(ci, 0, sizeof(double) * n);
    const double* ai = a + static_cast<size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const double aik = ai[kk];
      const double* bk = b + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

void gather_rows(const double* src, const int* ids, double* dst, int n_ids,
                 int d) {
  for (int i = 0; i < n_ids; ++i)
    std::memcpy(dst + static_cast<size_t>(i) * d,
                src + static_cast<size_t>(ids[i]) * d, sizeof(double) * d);
}

void scatter_add_rows(const double* src, const int* ids, double* dst,
                      int n_src, int d) {
  for (int r = 0; r < n_src; ++r) {
    double* out = dst + static_cast<size_t>(ids[r]) * d;
    const double* row = src + static_cast<size_t>(r) * d;
    for (int j = 0; j < d; ++j) out[j] += row[j];
  }
}

void segment_sum(const double* src, const int* keys, double* dst, int n_rows,
                 int d, int num_segments) {
  std::memset(dst, 0, sizeof(double) * num_segments * d);
  scatter_add_rows(src, keys, dst, n_rows, d);
}

void segment_mean(const double* src, const int* keys, double* dst, int n_rows,
                  int d, int num_segments) {
  segment_sum(src, keys, dst, n_rows, d, num_segments);
  std::vector<int> counts(num_segments, 0);
  for (int r = 0; r < n_rows; ++r) counts[keys[r]]++;
  for (int s = 0; s < num_segments; ++s) {
    if (counts[s] <= 1) continue;
    for (int j = 0; j < d; ++j) dst[static_cast<size_t>(s) * d + j] /= counts[s];
  }
}

void segment_max(const double* src, const int* keys, double* dst, int* argmax,
                 int n_rows, int d, int num_segments) {
  for (int s = 0; s < num_segments; ++s)
    for (int j = 0; j < d; ++j) {
      dst[static_cast<size_t>(s) * d + j] = 0.0;
      argmax[static_cast<size_t>(s) * d + j] = -1;
    }
  for (int r = 0; r < n_rows; ++r) {
    const int s = keys[r];
    for (int j = 0; j < d; ++j) {
      const size_t o = static_cast<size_t>(s) * d + j;
      if (argmax[o] < 0 || src[static_cast<size_t>(r) * d + j] > dst[o]) {
        dst[o] = src[static_cast<size_t>(r) * d + j];
        argmax[o] = r;
      }
    }
  }
}

void segment_softmax(const double* src, const int* keys, double* dst,
                     int n_rows, int d, int num_segments) {
  RowGroups seg = group_rows(keys, n_rows, num_segments);
  for (int s = 0; s < num_segments; ++s) {
    for (int j = 0; j < d; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p)
        mx = std::max(mx, src[static_cast<size_t>(seg.members[p]) * d + j]);
      double z = 0.0;
      for (int p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p) {
        const size_t idx = static_cast<size_t>(seg.members[p]) * d + j;
        dst[idx] = std::exp(src[idx] - mx);
        z += dst[idx];
      }
      for (int p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p)
        dst[static_cast<size_t>(seg.members[p]) * d + j] /= z;
    }
  }
}

}  // namespace serial
}  // namespace gdn::kernels
