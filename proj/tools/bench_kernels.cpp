// Benchmarks the serial reference kernels against the OpenMP versions and
// checks bitwise agreement on the way.

#include "smt/kernels.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace {

using smt::Tensor2;

Tensor2 random_tensor(int r, int c, std::mt19937_64& rng) {
    Tensor2 t(r, c);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : t.data) v = dist(rng);
    return t;
}

template <typename F>
double time_best_of(int reps, F f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

bool bitwise_equal(const Tensor2& a, const Tensor2& b) {
    return a.same_shape(b) && a.data == b.data;
}

} // namespace

int main() {
    std::mt19937_64 rng(42);
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-12s %6s %12s %12s %8s %8s\n", "kernel", "n", "serial_s", "omp_s",
                "speedup", "bitwise");

    bool all_equal = true;
    for (int n : {64, 128, 256, 512, 1024}) {
        const Tensor2 a = random_tensor(n, n, rng);
        const Tensor2 b = random_tensor(n, n, rng);
        Tensor2 cs(n, n), cp(n, n);
        const double ts = time_best_of(3, [&] { smt::kernels::mm_nn_serial(a, b, cs); });
        const double tp = time_best_of(3, [&] { smt::kernels::mm_nn_omp(a, b, cp); });
        const bool eq = bitwise_equal(cs, cp);
        all_equal = all_equal && eq;
        std::printf("%-12s %6d %12.6f %12.6f %8.2f %8s\n", "mm_nn", n, ts, tp, ts / tp,
                    eq ? "yes" : "NO");
    }
    for (int n : {256, 1024, 4096}) {
        const Tensor2 x = random_tensor(n, 256, rng);
        Tensor2 ys(n, 256), yp(n, 256);
        const double ts =
            time_best_of(5, [&] { smt::kernels::softmax_rows_serial(x, ys); });
        const double tp = time_best_of(5, [&] { smt::kernels::softmax_rows_omp(x, yp); });
        const bool eq = bitwise_equal(ys, yp);
        all_equal = all_equal && eq;
        std::printf("%-12s %6d %12.6f %12.6f %8.2f %8s\n", "softmax", n, ts, tp, ts / tp,
                    eq ? "yes" : "NO");
    }
    for (int n : {256, 1024, 4096}) {
        const Tensor2 x = random_tensor(n, 256, rng);
        const Tensor2 gain = random_tensor(1, 256, rng);
        const Tensor2 bias = random_tensor(1, 256, rng);
        Tensor2 ys(n, 256), yp(n, 256);
        const double ts = time_best_of(
            5, [&] { smt::kernels::layer_norm_rows_serial(x, gain, bias, 1e-5, ys); });
        const double tp = time_best_of(
            5, [&] { smt::kernels::layer_norm_rows_omp(x, gain, bias, 1e-5, yp); });
        const bool eq = bitwise_equal(ys, yp);
        all_equal = all_equal && eq;
        std::printf("%-12s %6d %12.6f %12.6f %8.2f %8s\n", "layernorm", n, ts, tp,
                    ts / tp, eq ? "yes" : "NO");
    }
    std::printf("bitwise agreement: %s\n", all_equal ? "all kernels" : "FAILED");
    return all_equal ? 0 : 1;
}
