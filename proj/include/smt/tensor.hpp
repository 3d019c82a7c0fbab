#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace smt {

/// Dense row-major matrix of doubles. The only numeric container in the
/// project; vectors are 1xN or Nx1 tensors.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    Tensor2(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<size_t>(r) * c)
            throw std::invalid_argument("Tensor2: data size does not match " +
                                        std::to_string(r) + "x" + std::to_string(c));
    }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return data.size(); }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("dimension error: " + what);
}

} // namespace smt
