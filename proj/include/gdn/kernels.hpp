#pragma once

#include <vector>

// Dense and segment kernels backing the tensor ops. The parallel versions
// accumulate in the same per-output order as the serial references, so
// results are bit-identical regardless of thread count.

namespace gdn::kernels {

// Row indices grouped by key (counting sort, stable): members of key s are
// offsets[s]..offsets[s+1], ascending.
struct RowGroups {
  std::vector<int> offsets;
  std::vector<int> members;
  int num_groups() const { return static_cast<int>(offsets.size()) - 1; }
  int count(int s) const { return offsets[s + 1] - offsets[s]; }
};

RowGroups group_rows(const int* keys, int n, int num_keys);

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// dst[i] = src[ids[i]], rows of width d
void gather_rows(const double* src, const int* ids, double* dst, int n_ids,
                 int d);

// dst[id] += src[row] for rows grouped by target id; dst not zeroed here
void scatter_add_rows(const double* src, double* dst, int d,
                      const RowGroups& by_id);

// Per-segment reductions over rows of width d; empty segments give zero rows
// (max also reports argmax per (segment, column), -1 when empty).
void segment_sum(const double* src, double* dst, int d, const RowGroups& seg);
void segment_mean(const double* src, double* dst, int d, const RowGroups& seg);
void segment_max(const double* src, double* dst, int* argmax, int d,
                 const RowGroups& seg);

// Column-wise softmax within each segment, max-subtracted for stability.
void segment_softmax(const double* src, double* dst, int d,
                     const RowGroups& seg);

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void gather_rows(const double* src, const int* ids, double* dst, int n_ids,
                 int d);
void scatter_add_rows(const double* src, const int* ids, double* dst,
                      int n_src, int d);
void segment_sum(const double* src, const int* keys, double* dst, int n_rows,
                 int d, int num_segments);
void segment_mean(const double* src, const int* keys, double* dst, int n_rows,
                  int d, int num_segments);
void segment_max(const double* src, const int* keys, double* dst, int* argmax,
                 int n_rows, int d, int num_segments);
void segment_softmax(const double* src, const int* keys, double* dst,
                     int n_rows, int d, int num_segments);

}  // namespace serial
}  // namespace gdn::kernels
