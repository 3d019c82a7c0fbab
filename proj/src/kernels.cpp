#include "smt/kernels.hpp"

#include <cmath>

namespace smt::kernels {

namespace {

void check_mm(const Tensor2& a, const Tensor2& b, int ak, int bk, const char* name) {
    require_shape(ak == bk, std::string(name) + " inner dimensions of " + a.shape_str() +
                                " and " + b.shape_str());
}

template <bool Par>
void mm_nn_impl(const Tensor2& a, const Tensor2& b, Tensor2& c) {
    const int n = a.rows, k = a.cols, m = b.cols;
#pragma omp parallel for if (Par) schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* ar = &a.data[static_cast<size_t>(i) * k];
        double* cr = &c.data[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) cr[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double av = ar[p];
            const double* br = &b.data[static_cast<size_t>(p) * m];
            for (int j = 0; j < m; ++j) cr[j] += av * br[j];
        }
    }
}

template <bool Par>
void mm_nt_impl(const Tensor2& a, const Tensor2& b, Tensor2& c) {
    const int n = a.rows, k = a.cols, m = b.rows;
#pragma omp parallel for if (Par) schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* ar = &a.data[static_cast<size_t>(i) * k];
        double* cr = &c.data[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) {
            const double* br = &b.data[static_cast<size_t>(j) * k];
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += ar[p] * br[p];
            cr[j] = s;
        }
    }
}

template <bool Par>
void mm_tn_impl(const Tensor2& a, const Tensor2& b, Tensor2& c) {
    const int n = a.cols, k = a.rows, m = b.cols;
#pragma omp parallel for if (Par) schedule(static)
    for (int i = 0; i < n; ++i) {
        double* cr = &c.data[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) cr[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double av = a.data[static_cast<size_t>(p) * n + i];
            const double* br = &b.data[static_cast<size_t>(p) * m];
            for (int j = 0; j < m; ++j) cr[j] += av * br[j];
        }
    }
}

template <bool Par>
void softmax_rows_impl(const Tensor2& x, Tensor2& y) {
    const int n = x.rows, c = x.cols;
#pragma omp parallel for if (Par) schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* xr = &x.data[static_cast<size_t>(i) * c];
        double* yr = &y.data[static_cast<size_t>(i) * c];
        double mx = xr[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, xr[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        for (int j = 0; j < c; ++j) yr[j] /= sum;
    }
}

template <bool Par>
void layer_norm_rows_impl(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                          double eps, Tensor2& y) {
    const int n = x.rows, c = x.cols;
#pragma omp parallel for if (Par) schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* xr = &x.data[static_cast<size_t>(i) * c];
        double* yr = &y.data[static_cast<size_t>(i) * c];
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += xr[j];
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            const double d = xr[j] - mean;
            var += d * d;
        }
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < c; ++j)
            yr[j] = (xr[j] - mean) * inv * gain.data[j] + bias.data[j];
    }
}

} // namespace

void mm_nn_serial(const Tensor2& a, const Tensor2& b, Tensor2& c) { mm_nn_impl<false>(a, b, c); }
void mm_nt_serial(const Tensor2& a, const Tensor2& b, Tensor2& c) { mm_nt_impl<false>(a, b, c); }
void mm_tn_serial(const Tensor2& a, const Tensor2& b, Tensor2& c) { mm_tn_impl<false>(a, b, c); }
void mm_nn_omp(const Tensor2& a, const Tensor2& b, Tensor2& c) { mm_nn_impl<true>(a, b, c); }
void mm_nt_omp(const Tensor2& a, const Tensor2& b, Tensor2& c) { mm_nt_impl<true>(a, b, c); }
void mm_tn_omp(const Tensor2& a, const Tensor2& b, Tensor2& c) { mm_tn_impl<true>(a, b, c); }

void softmax_rows_serial(const Tensor2& x, Tensor2& y) { softmax_rows_impl<false>(x, y); }
void softmax_rows_omp(const Tensor2& x, Tensor2& y) { softmax_rows_impl<true>(x, y); }
void layer_norm_rows_serial(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                            double eps, Tensor2& y) {
    layer_norm_rows_impl<false>(x, gain, bias, eps, y);
}
void layer_norm_rows_omp(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                         double eps, Tensor2& y) {
    layer_norm_rows_impl<true>(x, gain, bias, eps, y);
}

Tensor2 mm_nn(const Tensor2& a, const Tensor2& b) {
    check_mm(a, b, a.cols, b.rows, "matmul");
    Tensor2 c(a.rows, b.cols);
    const long work = static_cast<long>(a.rows) * a.cols * b.cols;
    if (work >= kParallelCutoff) mm_nn_omp(a, b, c);
    else mm_nn_serial(a, b, c);
    return c;
}

Tensor2 mm_nt(const Tensor2& a, const Tensor2& b) {
    check_mm(a, b, a.cols, b.cols, "matmul_nt");
    Tensor2 c(a.rows, b.rows);
    const long work = static_cast<long>(a.rows) * a.cols * b.rows;
    if (work >= kParallelCutoff) mm_nt_omp(a, b, c);
    else mm_nt_serial(a, b, c);
    return c;
}

Tensor2 mm_tn(const Tensor2& a, const Tensor2& b) {
    check_mm(a, b, a.rows, b.rows, "matmul_tn");
    Tensor2 c(a.cols, b.cols);
    const long work = static_cast<long>(a.cols) * a.rows * b.cols;
    if (work >= kParallelCutoff) mm_tn_omp(a, b, c);
    else mm_tn_serial(a, b, c);
    return c;
}

Tensor2 softmax_rows(const Tensor2& x) {
    Tensor2 y(x.rows, x.cols);
    if (x.size() >= kParallelCutoff) softmax_rows_omp(x, y);
    else softmax_rows_serial(x, y);
    return y;
}

Tensor2 layer_norm_rows(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                        double eps) {
    require_shape(gain.size() == static_cast<size_t>(x.cols) &&
                      bias.size() == static_cast<size_t>(x.cols),
                  "layer_norm gain/bias length vs " + x.shape_str());
    Tensor2 y(x.rows, x.cols);
    if (x.size() >= kParallelCutoff) layer_norm_rows_omp(x, gain, bias, eps, y);
    else layer_norm_rows_serial(x, gain, bias, eps, y);
    return y;
}

} // namespace smt::kernels
