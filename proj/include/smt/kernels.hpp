#pragma once

#include "smt/tensor.hpp"

namespace smt::kernels {

// Dense kernels come in two flavors: a serial reference and an OpenMP
// version parallelized over output rows. Each output element is computed
// with the same accumulation order in both, so results are bit-identical
// and runs are reproducible regardless of thread count.

// C += or = op(A, B). nn: A*B, nt: A*B^T, tn: A^T*B.
void mm_nn_serial(const Tensor2& a, const Tensor2& b, Tensor2& c);
void mm_nt_serial(const Tensor2& a, const Tensor2& b, Tensor2& c);
void mm_tn_serial(const Tensor2& a, const Tensor2& b, Tensor2& c);
void mm_nn_omp(const Tensor2& a, const Tensor2& b, Tensor2& c);
void mm_nt_omp(const Tensor2& a, const Tensor2& b, Tensor2& c);
void mm_tn_omp(const Tensor2& a, const Tensor2& b, Tensor2& c);

// Row-wise softmax with row-max subtraction.
void softmax_rows_serial(const Tensor2& x, Tensor2& y);
void softmax_rows_omp(const Tensor2& x, Tensor2& y);

// Row-wise layer normalization, pre gain/bias stats regularized by eps.
void layer_norm_rows_serial(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                            double eps, Tensor2& y);
void layer_norm_rows_omp(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                         double eps, Tensor2& y);

// Work-size threshold below which the serial path is used directly.
inline constexpr long kParallelCutoff = 1 << 14;

// Dispatching entry points used by the autodiff tape.
Tensor2 mm_nn(const Tensor2& a, const Tensor2& b);
Tensor2 mm_nt(const Tensor2& a, const Tensor2& b);
Tensor2 mm_tn(const Tensor2& a, const Tensor2& b);
Tensor2 softmax_rows(const Tensor2& x);
Tensor2 layer_norm_rows(const Tensor2& x, const Tensor2& gain, const Tensor2& bias,
                        double eps);

} // namespace smt::kernels
