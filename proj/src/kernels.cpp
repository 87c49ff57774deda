#include "fairsage/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairsage::kernels {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count() { return g_threads.load(std::memory_order_relaxed); }

void set_thread_count(int n) {
    if (n < 1) n = 1;
    g_threads.store(n, std::memory_order_relaxed);
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

namespace detail {

// Row block [i0, i1) of the matmul; identical inner loop for both paths so
// the accumulation order per output element never changes.
inline void matmul_rows(const double* a, const double* b, double* c,
                        std::size_t k, std::size_t m,
                        std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
        double* ci = c + i * m;
        std::fill(ci, ci + m, 0.0);
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b + p * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
        }
    }
}

inline void segment_mean_one(const double* values, const std::uint32_t* offsets,
                             std::size_t dim, std::size_t s, double* out) {
    double* row = out + s * dim;
    const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
    std::fill(row, row + dim, 0.0);
    if (hi == lo) return;
    for (std::uint32_t r = lo; r < hi; ++r) {
        const double* v = values + static_cast<std::size_t>(r) * dim;
        for (std::size_t j = 0; j < dim; ++j) row[j] += v[j];
    }
    // True division: an exact sum of equal rows divides back to the row.
    const double count = static_cast<double>(hi - lo);
    for (std::size_t j = 0; j < dim; ++j) row[j] /= count;
}

inline void segment_max_one(const double* values, const std::uint32_t* offsets,
                            std::size_t dim, std::size_t s, double* out,
                            std::uint32_t* argmax) {
    double* row = out + s * dim;
    std::uint32_t* arg = argmax + s * dim;
    const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
    if (hi == lo) {
        std::fill(row, row + dim, 0.0);
        for (std::size_t j = 0; j < dim; ++j) arg[j] = UINT32_MAX;
        return;
    }
    const double* first = values + static_cast<std::size_t>(lo) * dim;
    for (std::size_t j = 0; j < dim; ++j) {
        row[j] = first[j];
        arg[j] = lo;
    }
    for (std::uint32_t r = lo + 1; r < hi; ++r) {
        const double* v = values + static_cast<std::size_t>(r) * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            if (v[j] > row[j]) {  // strict: first maximal row wins ties
                row[j] = v[j];
                arg[j] = r;
            }
        }
    }
}

inline void segment_softmax_one(const double* scores, const double* values,
                                const std::uint32_t* offsets, std::size_t dim,
                                std::size_t s, double* weights, double* out) {
    double* row = out + s * dim;
    const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
    std::fill(row, row + dim, 0.0);
    if (hi == lo) return;
    double mx = scores[lo];
    for (std::uint32_t r = lo + 1; r < hi; ++r) mx = std::max(mx, scores[r]);
    double z = 0.0;
    for (std::uint32_t r = lo; r < hi; ++r) {
        weights[r] = std::exp(scores[r] - mx);
        z += weights[r];
    }
    const double inv = 1.0 / z;
    for (std::uint32_t r = lo; r < hi; ++r) {
        weights[r] *= inv;
        const double* v = values + static_cast<std::size_t>(r) * dim;
        for (std::size_t j = 0; j < dim; ++j) row[j] += weights[r] * v[j];
    }
}

inline void csr_matvec_one(const std::uint64_t* offsets, const std::uint32_t* targets,
                           const double* x, std::size_t i, double* y) {
    double acc = 0.0;
    for (std::uint64_t e = offsets[i]; e < offsets[i + 1]; ++e) acc += x[targets[e]];
    y[i] = acc;
}

}  // namespace detail

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
    detail::matmul_rows(a, b, c, k, m, 0, n);
}

void segment_mean(const double* values, const std::uint32_t* offsets,
                  std::size_t segments, std::size_t dim, double* out) {
    for (std::size_t s = 0; s < segments; ++s)
        detail::segment_mean_one(values, offsets, dim, s, out);
}

void segment_max(const double* values, const std::uint32_t* offsets,
                 std::size_t segments, std::size_t dim, double* out,
                 std::uint32_t* argmax) {
    for (std::size_t s = 0; s < segments; ++s)
        detail::segment_max_one(values, offsets, dim, s, out, argmax);
}

void segment_softmax_weighted_sum(const double* scores, const double* values,
                                  const std::uint32_t* offsets, std::size_t segments,
                                  std::size_t dim, double* weights, double* out) {
    for (std::size_t s = 0; s < segments; ++s)
        detail::segment_softmax_one(scores, values, offsets, dim, s, weights, out);
}

void csr_matvec(const std::uint64_t* offsets, const std::uint32_t* targets,
                std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) detail::csr_matvec_one(offsets, targets, x, i, y);
}

}  // namespace serial

namespace par {

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) detail::matmul_rows(a, b, c, k, m, i, i + 1);
}

void segment_mean(const double* values, const std::uint32_t* offsets,
                  std::size_t segments, std::size_t dim, double* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t s = 0; s < segments; ++s)
        detail::segment_mean_one(values, offsets, dim, s, out);
}

void segment_max(const double* values, const std::uint32_t* offsets,
                 std::size_t segments, std::size_t dim, double* out,
                 std::uint32_t* argmax) {
#pragma omp parallel for schedule(static)
    for (std::size_t s = 0; s < segments; ++s)
        detail::segment_max_one(values, offsets, dim, s, out, argmax);
}

void segment_softmax_weighted_sum(const double* scores, const double* values,
                                  const std::uint32_t* offsets, std::size_t segments,
                                  std::size_t dim, double* weights, double* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t s = 0; s < segments; ++s)
        detail::segment_softmax_one(scores, values, offsets, dim, s, weights, out);
}

void csr_matvec(const std::uint64_t* offsets, const std::uint32_t* targets,
                std::size_t n, const double* x, double* y) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) detail::csr_matvec_one(offsets, targets, x, i, y);
}

}  // namespace par

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t k, std::size_t m) {
    if (thread_count() > 1)
        par::matmul(a, b, c, n, k, m);
    else
        serial::matmul(a, b, c, n, k, m);
}

void segment_mean(const double* values, const std::uint32_t* offsets,
                  std::size_t segments, std::size_t dim, double* out) {
    if (thread_count() > 1)
        par::segment_mean(values, offsets, segments, dim, out);
    else
        serial::segment_mean(values, offsets, segments, dim, out);
}

void segment_max(const double* values, const std::uint32_t* offsets,
                 std::size_t segments, std::size_t dim, double* out,
                 std::uint32_t* argmax) {
    if (thread_count() > 1)
        par::segment_max(values, offsets, segments, dim, out, argmax);
    else
        serial::segment_max(values, offsets, segments, dim, out, argmax);
}

void segment_softmax_weighted_sum(const double* scores, const double* values,
                                  const std::uint32_t* offsets, std::size_t segments,
                                  std::size_t dim, double* weights, double* out) {
    if (thread_count() > 1)
        par::segment_softmax_weighted_sum(scores, values, offsets, segments, dim, weights, out);
    else
        serial::segment_softmax_weighted_sum(scores, values, offsets, segments, dim, weights, out);
}

void csr_matvec(const std::uint64_t* offsets, const std::uint32_t* targets,
                std::size_t n, const double* x, double* y) {
    if (thread_count() > 1)
        par::csr_matvec(offsets, targets, n, x, y);
    else
        serial::csr_matvec(offsets, targets, n, x, y);
}

}  // namespace fairsage::kernels
