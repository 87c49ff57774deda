#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fairsage/kernels.hpp"
#include "fairsage/rng.hpp"

using namespace fairsage;

namespace {

// Straight ijk reference, written independently of the library kernels.
void matmul_oracle(const std::vector<double>& a, const std::vector<double>& b,
                   std::vector<double>& c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * m + j];
            c[i * m + j] = acc;
        }
}

std::vector<double> random_values(std::size_t n, RngStream& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace

TEST_CASE("matmul matches the naive reference") {
    RngStream rng(7, 0);
    for (auto [n, k, m] : {std::array<std::size_t, 3>{1, 1, 1},
                           {3, 4, 5},
                           {7, 1, 2},
                           {16, 16, 16},
                           {5, 9, 1}}) {
        auto a = random_values(n * k, rng);
        auto b = random_values(k * m, rng);
        std::vector<double> got(n * m), want(n * m);
        kernels::serial::matmul(a.data(), b.data(), got.data(), n, k, m);
        matmul_oracle(a, b, want, n, k, m);
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == want[i]);
    }
}

TEST_CASE("parallel matmul is bitwise equal to serial") {
    RngStream rng(11, 0);
    std::size_t n = 33, k = 17, m = 29;
    auto a = random_values(n * k, rng);
    auto b = random_values(k * m, rng);
    std::vector<double> s(n * m), p(n * m);
    kernels::serial::matmul(a.data(), b.data(), s.data(), n, k, m);
    kernels::par::matmul(a.data(), b.data(), p.data(), n, k, m);
    CHECK(std::memcmp(s.data(), p.data(), s.size() * sizeof(double)) == 0);
}

TEST_CASE("segment_mean averages rows per segment") {
    // rows [1,3] and [3,5] in one segment average to [2,4]
    std::vector<double> values = {1, 3, 3, 5};
    std::vector<std::uint32_t> offsets = {0, 2};
    std::vector<double> out(2);
    kernels::serial::segment_mean(values.data(), offsets.data(), 1, 2, out.data());
    CHECK(out[0] == 2.0);
    CHECK(out[1] == 4.0);
}

TEST_CASE("segment_mean yields zero rows for empty segments") {
    std::vector<double> values = {5, 6};
    std::vector<std::uint32_t> offsets = {0, 0, 2, 2};
    std::vector<double> out(3, 99.0);
    kernels::serial::segment_mean(values.data(), offsets.data(), 3, 1, out.data());
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 5.5);
    CHECK(out[2] == 0.0);
}

TEST_CASE("segment_max takes columnwise maxima") {
    // rows [1,5] and [3,2] reduce to [3,5]
    std::vector<double> values = {1, 5, 3, 2};
    std::vector<std::uint32_t> offsets = {0, 2};
    std::vector<double> out(2);
    std::vector<std::uint32_t> argmax(2);
    kernels::serial::segment_max(values.data(), offsets.data(), 1, 2, out.data(), argmax.data());
    CHECK(out[0] == 3.0);
    CHECK(out[1] == 5.0);
    CHECK(argmax[0] == 1);
    CHECK(argmax[1] == 0);
}

TEST_CASE("segment_max ties go to the first row, empty segments to none") {
    std::vector<double> values = {7, 1, 7, 2};
    std::vector<std::uint32_t> offsets = {0, 2, 2};
    std::vector<double> out(4);
    std::vector<std::uint32_t> argmax(4);
    kernels::serial::segment_max(values.data(), offsets.data(), 2, 2, out.data(), argmax.data());
    CHECK(argmax[0] == 0);
    CHECK(argmax[1] == 1);
    CHECK(out[2] == 0.0);
    CHECK(argmax[2] == UINT32_MAX);
    CHECK(argmax[3] == UINT32_MAX);
}

TEST_CASE("segment softmax weights sum to 1 and shift with translation") {
    RngStream rng(13, 0);
    auto scores = random_values(9, rng);
    auto values = random_values(9 * 3, rng);
    std::vector<std::uint32_t> offsets = {0, 4, 4, 9};
    std::vector<double> w(9), out(9), w2(9), out2(9);
    kernels::serial::segment_softmax_weighted_sum(scores.data(), values.data(), offsets.data(),
                                                  3, 3, w.data(), out.data());
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        if (offsets[s] == offsets[s + 1]) continue;
        double total = 0.0;
        for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
            CHECK(w[r] > 0.0);
            total += w[r];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (double& x : scores) x += 3.5;
    kernels::serial::segment_softmax_weighted_sum(scores.data(), values.data(), offsets.data(),
                                                  3, 3, w2.data(), out2.data());
    for (std::size_t i = 0; i < 9; ++i) CHECK(w2[i] == doctest::Approx(w[i]).epsilon(1e-12));
}

TEST_CASE("segment softmax with equal scores averages symmetric values") {
    std::vector<double> scores = {0.0, 0.0};
    std::vector<double> values = {0, 2, 2, 0};
    std::vector<std::uint32_t> offsets = {0, 2};
    std::vector<double> w(2), out(2);
    kernels::serial::segment_softmax_weighted_sum(scores.data(), values.data(), offsets.data(),
                                                  1, 2, w.data(), out.data());
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 0.5);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 1.0);
}

TEST_CASE("segment softmax stays finite under extreme scores") {
    std::vector<double> scores = {700.0, -700.0, 0.0};
    std::vector<double> values = {1, 2, 3};
    std::vector<std::uint32_t> offsets = {0, 3};
    std::vector<double> w(3), out(3);
    kernels::serial::segment_softmax_weighted_sum(scores.data(), values.data(), offsets.data(),
                                                  1, 1, w.data(), out.data());
    CHECK(std::isfinite(out[0]));
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(out[0] == doctest::Approx(1.0));
}

TEST_CASE("csr_matvec matches a dense oracle") {
    // 4-node graph: 0->{1,2}, 1->{3}, 2->{}, 3->{0,1,2}
    std::vector<std::uint64_t> offsets = {0, 2, 3, 3, 6};
    std::vector<std::uint32_t> targets = {1, 2, 3, 0, 1, 2};
    std::vector<double> x = {0.5, -1.0, 2.0, 0.25};
    std::vector<double> y(4);
    kernels::serial::csr_matvec(offsets.data(), targets.data(), 4, x.data(), y.data());
    CHECK(y[0] == x[1] + x[2]);
    CHECK(y[1] == x[3]);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == x[0] + x[1] + x[2]);
}

TEST_CASE("parallel segment kernels are bitwise equal to serial") {
    RngStream rng(17, 0);
    std::size_t rows = 257, dim = 7;
    auto values = random_values(rows * dim, rng);
    auto scores = random_values(rows, rng);
    std::vector<std::uint32_t> offsets = {0};
    while (offsets.back() < rows) {
        std::uint32_t step = static_cast<std::uint32_t>(rng.uniform_int(6));
        offsets.push_back(std::min<std::uint32_t>(rows, offsets.back() + step));
    }
    std::size_t segments = offsets.size() - 1;

    std::vector<double> s1(segments * dim), p1(segments * dim);
    kernels::serial::segment_mean(values.data(), offsets.data(), segments, dim, s1.data());
    kernels::par::segment_mean(values.data(), offsets.data(), segments, dim, p1.data());
    CHECK(std::memcmp(s1.data(), p1.data(), s1.size() * sizeof(double)) == 0);

    std::vector<double> s2(segments * dim), p2(segments * dim);
    std::vector<std::uint32_t> am1(segments * dim), am2(segments * dim);
    kernels::serial::segment_max(values.data(), offsets.data(), segments, dim, s2.data(), am1.data());
    kernels::par::segment_max(values.data(), offsets.data(), segments, dim, p2.data(), am2.data());
    CHECK(std::memcmp(s2.data(), p2.data(), s2.size() * sizeof(double)) == 0);
    CHECK(am1 == am2);

    std::vector<double> s3(segments * dim), p3(segments * dim), w1(rows), w2(rows);
    kernels::serial::segment_softmax_weighted_sum(scores.data(), values.data(), offsets.data(),
                                                  segments, dim, w1.data(), s3.data());
    kernels::par::segment_softmax_weighted_sum(scores.data(), values.data(), offsets.data(),
                                               segments, dim, w2.data(), p3.data());
    CHECK(std::memcmp(s3.data(), p3.data(), s3.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(w1.data(), w2.data(), w1.size() * sizeof(double)) == 0);

    std::vector<std::uint64_t> coff(rows + 1, 0);
    std::vector<std::uint32_t> ctgt;
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t deg = rng.uniform_int(4);
        for (std::size_t d = 0; d < deg; ++d)
            ctgt.push_back(static_cast<std::uint32_t>(rng.uniform_int(rows)));
        coff[i + 1] = ctgt.size();
    }
    std::vector<double> xs = random_values(rows, rng), y1(rows), y2(rows);
    kernels::serial::csr_matvec(coff.data(), ctgt.data(), rows, xs.data(), y1.data());
    kernels::par::csr_matvec(coff.data(), ctgt.data(), rows, xs.data(), y2.data());
    CHECK(std::memcmp(y1.data(), y2.data(), y1.size() * sizeof(double)) == 0);
}

TEST_CASE("dispatch routes by configured thread count") {
    RngStream rng(19, 0);
    auto a = random_values(6 * 5, rng);
    auto b = random_values(5 * 4, rng);
    std::vector<double> one(24), four(24);
    kernels::set_thread_count(1);
    CHECK(kernels::thread_count() == 1);
    kernels::matmul(a.data(), b.data(), one.data(), 6, 5, 4);
    kernels::set_thread_count(4);
    CHECK(kernels::thread_count() == 4);
    kernels::matmul(a.data(), b.data(), four.data(), 6, 5, 4);
    kernels::set_thread_count(1);
    CHECK(std::memcmp(one.data(), four.data(), one.size() * sizeof(double)) == 0);
}
