#include "dpr/kernels.hpp"

namespace dpr::kernels::detail {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine(const double* w, const double* b, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = b[r] + dot(w + r * cols, x, cols);
}

void affine_transposed(const double* w, const double* d, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) axpy(d[r], w + r * cols, y, cols);
}

void outer_accumulate(double scale, const double* u, const double* v, double* g, std::size_t rows,
                      std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy(scale * u[r], v, g + r * cols, cols);
}

void relu(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

constexpr KernelSet kScalar{Backend::scalar, "scalar", dot, axpy, affine, affine_transposed,
                            outer_accumulate, relu};

} // namespace

const KernelSet& scalar_kernels() noexcept { return kScalar; }

} // namespace dpr::kernels::detail
