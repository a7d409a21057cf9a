#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dpr/kernels.hpp"
#include "dpr/random.hpp"

using namespace dpr::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, dpr::SplitMix64& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = 4.0 * rng.uniform() - 2.0;
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-12 * scale);
}

std::vector<Backend> simd_backends() {
    std::vector<Backend> out;
    for (auto b : {Backend::avx2, Backend::neon})
        if (available(b)) out.push_back(b);
    return out;
}

} // namespace

TEST_CASE("scalar backend is always available and selectable") {
    CHECK(available(Backend::scalar));
    const auto before = active_backend();
    select(Backend::scalar);
    CHECK(active_backend() == Backend::scalar);
    select(before);
    CHECK(backend_name(Backend::avx2) == "avx2");
}

TEST_CASE("unavailable backends throw") {
    for (auto b : {Backend::avx2, Backend::neon})
        if (!available(b)) CHECK_THROWS(kernel_set(b));
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
    const auto& ref = kernel_set(Backend::scalar);
    const auto backends = simd_backends();
    if (backends.empty()) MESSAGE("no SIMD backend on this machine; only scalar checked");
    dpr::SplitMix64 rng(77);

    for (auto backend : backends) {
        const auto& k = kernel_set(backend);
        CAPTURE(k.name);
        for (std::size_t n = 0; n <= 67; ++n) {
            const auto a = random_vec(n, rng);
            const auto b = random_vec(n, rng);
            CHECK(std::fabs(k.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-12 * (n + 1));

            auto y1 = random_vec(n, rng);
            auto y2 = y1;
            k.axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            check_close(y1, y2, 4.0);

            std::vector<double> r1(n), r2(n);
            k.relu(a.data(), r1.data(), n);
            ref.relu(a.data(), r2.data(), n);
            CHECK(r1 == r2);
        }

        for (std::size_t rows : {1u, 2u, 7u, 13u}) {
            for (std::size_t cols : {1u, 3u, 4u, 9u, 32u, 33u}) {
                const auto w = random_vec(rows * cols, rng);
                const auto bias = random_vec(rows, rng);
                const auto x = random_vec(cols, rng);
                const auto d = random_vec(rows, rng);

                std::vector<double> y1(rows), y2(rows);
                k.affine(w.data(), bias.data(), x.data(), y1.data(), rows, cols);
                ref.affine(w.data(), bias.data(), x.data(), y2.data(), rows, cols);
                check_close(y1, y2, 4.0 * cols);

                std::vector<double> t1(cols), t2(cols);
                k.affine_transposed(w.data(), d.data(), t1.data(), rows, cols);
                ref.affine_transposed(w.data(), d.data(), t2.data(), rows, cols);
                check_close(t1, t2, 4.0 * rows);

                auto g1 = random_vec(rows * cols, rng);
                auto g2 = g1;
                k.outer_accumulate(0.5, d.data(), x.data(), g1.data(), rows, cols);
                ref.outer_accumulate(0.5, d.data(), x.data(), g2.data(), rows, cols);
                check_close(g1, g2, 4.0);
            }
        }
    }
}

TEST_CASE("relu maps NaN to zero in every backend") {
    const std::vector<double> x{std::numeric_limits<double>::quiet_NaN(), -1.0, 2.0, -0.0, 3.0};
    for (auto b : {Backend::scalar, Backend::avx2, Backend::neon}) {
        if (!available(b)) continue;
        std::vector<double> y(x.size());
        kernel_set(b).relu(x.data(), y.data(), x.size());
        CHECK(y[0] == 0.0);
        CHECK(y[1] == 0.0);
        CHECK(y[2] == 2.0);
        CHECK(y[4] == 3.0);
    }
}
