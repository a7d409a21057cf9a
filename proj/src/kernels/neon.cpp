#include "dpr/kernels.hpp"

#include <arm_neon.h>

namespace dpr::kernels::detail {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
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
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vld1q_f64(x + i);
        // Select instead of vmaxq so NaN maps to 0 like the scalar kernel.
        vst1q_f64(y + i, vbslq_f64(vcgtq_f64(v, vdupq_n_f64(0.0)), v, vdupq_n_f64(0.0)));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

constexpr KernelSet kNeon{Backend::neon, "neon", dot, axpy, affine, affine_transposed,
                          outer_accumulate, relu};

} // namespace

const KernelSet& neon_kernels() noexcept { return kNeon; }

} // namespace dpr::kernels::detail
