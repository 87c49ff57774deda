#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fairsage::kernels {

// Global worker-thread setting. 1 (the default) routes every dispatching
// kernel through the serial reference path and is the reproducibility mode
// used by the test suite. The parallel variants split work by output row /
// segment, so each element is accumulated in the same order as the serial
// code and results are bitwise identical either way.
int thread_count();
void set_thread_count(int n);

namespace serial {

// c[n x m] = a[n x k] * b[k x m]; c is overwritten.
void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);

// out[s x d]: row means of values[r x d] per segment; empty segments give
// zero rows. offsets has s+1 monotone entries with offsets[s] == r.
void segment_mean(const double* values, const std::uint32_t* offsets,
                  std::size_t segments, std::size_t dim, double* out);

// Columnwise max per segment; empty segments give zero rows. argmax records
// the winning row index per (segment, column), first maximal row on ties.
void segment_max(const double* values, const std::uint32_t* offsets,
                 std::size_t segments, std::size_t dim, double* out,
                 std::uint32_t* argmax);

// Softmax of scores within each segment (weights sum to 1 per non-empty
// segment), then out[s x d] = sum_i w_i * values[i x d].
void segment_softmax_weighted_sum(const double* scores, const double* values,
                                  const std::uint32_t* offsets, std::size_t segments,
                                  std::size_t dim, double* weights, double* out);

// y[i] = sum of x[targets[j]] over row i of a CSR adjacency.
void csr_matvec(const std::uint64_t* offsets, const std::uint32_t* targets,
                std::size_t n, const double* x, double* y);

}  // namespace serial

namespace par {

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);
void segment_mean(const double* values, const std::uint32_t* offsets,
                  std::size_t segments, std::size_t dim, double* out);
void segment_max(const double* values, const std::uint32_t* offsets,
                 std::size_t segments, std::size_t dim, double* out,
                 std::uint32_t* argmax);
void segment_softmax_weighted_sum(const double* scores, const double* values,
                                  const std::uint32_t* offsets, std::size_t segments,
                                  std::size_t dim, double* weights, double* out);
void csr_matvec(const std::uint64_t* offsets, const std::uint32_t* targets,
                std::size_t n, const double* x, double* y);

}  // namespace par

// Dispatching entry points: serial when thread_count() == 1, OpenMP otherwise.
void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m);
void segment_mean(const double* values, const std::uint32_t* offsets,
                  std::size_t segments, std::size_t dim, double* out);
void segment_max(const double* values, const std::uint32_t* offsets,
                 std::size_t segments, std::size_t dim, double* out,
                 std::uint32_t* argmax);
void segment_softmax_weighted_sum(const double* scores, const double* values,
                                  const std::uint32_t* offsets, std::size_t segments,
                                  std::size_t dim, double* weights, double* out);
void csr_matvec(const std::uint64_t* offsets, const std::uint32_t* targets,
                std::size_t n, const double* x, double* y);

}  // namespace fairsage::kernels
