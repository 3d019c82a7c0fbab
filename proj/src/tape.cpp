#include "smt/tape.hpp"

#include "smt/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace smt {

Tape::Id Tape::push(Tensor2 value, std::function<void()> back) {
    Node n;
    n.grad = Tensor2(value.rows, value.cols);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

void Tape::check_id(Id id) const {
    if (id < 0 || id >= static_cast<Id>(nodes_.size()))
        throw std::logic_error("Tape: invalid node id");
}

Tape::Id Tape::constant(Tensor2 v) { return push(std::move(v)); }

Tape::Id Tape::param(const ParamStore& store, const std::string& name) {
    Id id = push(store.get(name));
    param_leaves_.emplace_back(id, name);
    return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
    check_id(a);
    check_id(b);
    Tensor2 c = kernels::mm_nn(value(a), value(b));
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, b, id] {
        // dA = dC * B^T, dB = A^T * dC
        Tensor2 da = kernels::mm_nt(nodes_[id].grad, nodes_[b].value);
        Tensor2 db = kernels::mm_tn(nodes_[a].value, nodes_[id].grad);
        for (size_t i = 0; i < da.size(); ++i) nodes_[a].grad.data[i] += da.data[i];
        for (size_t i = 0; i < db.size(); ++i) nodes_[b].grad.data[i] += db.data[i];
    };
    return id;
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
    check_id(a);
    check_id(b);
    Tensor2 c = kernels::mm_nt(value(a), value(b));
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, b, id] {
        // C = A * B^T: dA = dC * B, dB = dC^T * A
        Tensor2 da = kernels::mm_nn(nodes_[id].grad, nodes_[b].value);
        Tensor2 db = kernels::mm_tn(nodes_[id].grad, nodes_[a].value);
        for (size_t i = 0; i < da.size(); ++i) nodes_[a].grad.data[i] += da.data[i];
        for (size_t i = 0; i < db.size(); ++i) nodes_[b].grad.data[i] += db.data[i];
    };
    return id;
}

Tape::Id Tape::add(Id a, Id b) {
    check_id(a);
    check_id(b);
    require_shape(value(a).same_shape(value(b)),
                  "add of " + value(a).shape_str() + " and " + value(b).shape_str());
    Tensor2 c = value(a);
    for (size_t i = 0; i < c.size(); ++i) c.data[i] += value(b).data[i];
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, b, id] {
        for (size_t i = 0; i < nodes_[id].grad.size(); ++i) {
            nodes_[a].grad.data[i] += nodes_[id].grad.data[i];
            nodes_[b].grad.data[i] += nodes_[id].grad.data[i];
        }
    };
    return id;
}

Tape::Id Tape::sub(Id a, Id b) {
    check_id(a);
    check_id(b);
    require_shape(value(a).same_shape(value(b)),
                  "sub of " + value(a).shape_str() + " and " + value(b).shape_str());
    Tensor2 c = value(a);
    for (size_t i = 0; i < c.size(); ++i) c.data[i] -= value(b).data[i];
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, b, id] {
        for (size_t i = 0; i < nodes_[id].grad.size(); ++i) {
            nodes_[a].grad.data[i] += nodes_[id].grad.data[i];
            nodes_[b].grad.data[i] -= nodes_[id].grad.data[i];
        }
    };
    return id;
}

Tape::Id Tape::add_rowvec(Id x, Id v) {
    check_id(x);
    check_id(v);
    require_shape(value(v).rows == 1 && value(v).cols == value(x).cols,
                  "add_rowvec of " + value(x).shape_str() + " and " + value(v).shape_str());
    Tensor2 c = value(x);
    const int cols = c.cols;
    for (int i = 0; i < c.rows; ++i)
        for (int j = 0; j < cols; ++j) c.at(i, j) += value(v).data[j];
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, x, v, id] {
        const Tensor2& g = nodes_[id].grad;
        for (size_t i = 0; i < g.size(); ++i) nodes_[x].grad.data[i] += g.data[i];
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) nodes_[v].grad.data[j] += g.at(i, j);
    };
    return id;
}

Tape::Id Tape::scale(Id a, double s) {
    check_id(a);
    Tensor2 c = value(a);
    for (auto& x : c.data) x *= s;
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, s, id] {
        for (size_t i = 0; i < nodes_[id].grad.size(); ++i)
            nodes_[a].grad.data[i] += s * nodes_[id].grad.data[i];
    };
    return id;
}

Tape::Id Tape::relu(Id a) {
    check_id(a);
    Tensor2 c = value(a);
    for (auto& x : c.data) x = x > 0.0 ? x : 0.0;
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, id] {
        for (size_t i = 0; i < nodes_[id].grad.size(); ++i)
            if (nodes_[a].value.data[i] > 0.0)
                nodes_[a].grad.data[i] += nodes_[id].grad.data[i];
    };
    return id;
}

Tape::Id Tape::softmax_rows(Id a) {
    check_id(a);
    for (double x : value(a).data)
        if (!std::isfinite(x))
            throw std::domain_error("softmax_rows: non-finite input");
    Tensor2 y = kernels::softmax_rows(value(a));
    Id id = push(std::move(y), nullptr);
    nodes_[id].back = [this, a, id] {
        const Tensor2& y = nodes_[id].value;
        const Tensor2& dy = nodes_[id].grad;
        for (int i = 0; i < y.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < y.cols; ++j) dot += dy.at(i, j) * y.at(i, j);
            for (int j = 0; j < y.cols; ++j)
                nodes_[a].grad.at(i, j) += (dy.at(i, j) - dot) * y.at(i, j);
        }
    };
    return id;
}

Tape::Id Tape::layer_norm(Id x, Id gain, Id bias, double eps) {
    check_id(x);
    check_id(gain);
    check_id(bias);
    Tensor2 y = kernels::layer_norm_rows(value(x), value(gain), value(bias), eps);
    Id id = push(std::move(y), nullptr);
    nodes_[id].back = [this, x, gain, bias, eps, id] {
        const Tensor2& xv = nodes_[x].value;
        const Tensor2& g = nodes_[gain].value;
        const Tensor2& dy = nodes_[id].grad;
        const int c = xv.cols;
        for (int i = 0; i < xv.rows; ++i) {
            double mean = 0.0;
            for (int j = 0; j < c; ++j) mean += xv.at(i, j);
            mean /= c;
            double var = 0.0;
            for (int j = 0; j < c; ++j) {
                const double d = xv.at(i, j) - mean;
                var += d * d;
            }
            var /= c;
            const double inv = 1.0 / std::sqrt(var + eps);
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (int j = 0; j < c; ++j) {
                const double xh = (xv.at(i, j) - mean) * inv;
                const double dxh = dy.at(i, j) * g.data[j];
                mean_dxh += dxh;
                mean_dxh_xh += dxh * xh;
                nodes_[gain].grad.data[j] += dy.at(i, j) * xh;
                nodes_[bias].grad.data[j] += dy.at(i, j);
            }
            mean_dxh /= c;
            mean_dxh_xh /= c;
            for (int j = 0; j < c; ++j) {
                const double xh = (xv.at(i, j) - mean) * inv;
                const double dxh = dy.at(i, j) * g.data[j];
                nodes_[x].grad.at(i, j) += inv * (dxh - mean_dxh - xh * mean_dxh_xh);
            }
        }
    };
    return id;
}

Tape::Id Tape::concat_cols(std::span<const Id> parts) {
    if (parts.empty()) throw std::logic_error("concat_cols: no parts");
    const int rows = value(parts[0]).rows;
    int cols = 0;
    for (Id p : parts) {
        check_id(p);
        require_shape(value(p).rows == rows, "concat_cols row mismatch");
        cols += value(p).cols;
    }
    Tensor2 c(rows, cols);
    int off = 0;
    for (Id p : parts) {
        const Tensor2& v = value(p);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < v.cols; ++j) c.at(i, off + j) = v.at(i, j);
        off += v.cols;
    }
    std::vector<Id> ps(parts.begin(), parts.end());
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, ps, id] {
        const Tensor2& g = nodes_[id].grad;
        int off = 0;
        for (Id p : ps) {
            Tensor2& pg = nodes_[p].grad;
            for (int i = 0; i < pg.rows; ++i)
                for (int j = 0; j < pg.cols; ++j) pg.at(i, j) += g.at(i, off + j);
            off += pg.cols;
        }
    };
    return id;
}

Tape::Id Tape::concat_rows(std::span<const Id> parts) {
    if (parts.empty()) throw std::logic_error("concat_rows: no parts");
    const int cols = value(parts[0]).cols;
    int rows = 0;
    for (Id p : parts) {
        check_id(p);
        require_shape(value(p).cols == cols, "concat_rows column mismatch");
        rows += value(p).rows;
    }
    Tensor2 c(rows, cols);
    int off = 0;
    for (Id p : parts) {
        const Tensor2& v = value(p);
        for (int i = 0; i < v.rows; ++i)
            for (int j = 0; j < cols; ++j) c.at(off + i, j) = v.at(i, j);
        off += v.rows;
    }
    std::vector<Id> ps(parts.begin(), parts.end());
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, ps, id] {
        const Tensor2& g = nodes_[id].grad;
        int off = 0;
        for (Id p : ps) {
            Tensor2& pg = nodes_[p].grad;
            for (int i = 0; i < pg.rows; ++i)
                for (int j = 0; j < pg.cols; ++j) pg.at(i, j) += g.at(off + i, j);
            off += pg.rows;
        }
    };
    return id;
}

Tape::Id Tape::slice_cols(Id a, int begin, int end) {
    check_id(a);
    require_shape(0 <= begin && begin < end && end <= value(a).cols,
                  "slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                      ") of " + value(a).shape_str());
    const Tensor2& v = value(a);
    Tensor2 c(v.rows, end - begin);
    for (int i = 0; i < v.rows; ++i)
        for (int j = begin; j < end; ++j) c.at(i, j - begin) = v.at(i, j);
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, begin, id] {
        const Tensor2& g = nodes_[id].grad;
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) nodes_[a].grad.at(i, begin + j) += g.at(i, j);
    };
    return id;
}

Tape::Id Tape::slice_rows(Id a, int begin, int end) {
    check_id(a);
    require_shape(0 <= begin && begin < end && end <= value(a).rows,
                  "slice_rows [" + std::to_string(begin) + "," + std::to_string(end) +
                      ") of " + value(a).shape_str());
    const Tensor2& v = value(a);
    Tensor2 c(end - begin, v.cols);
    for (int i = begin; i < end; ++i)
        for (int j = 0; j < v.cols; ++j) c.at(i - begin, j) = v.at(i, j);
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, begin, id] {
        const Tensor2& g = nodes_[id].grad;
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) nodes_[a].grad.at(begin + i, j) += g.at(i, j);
    };
    return id;
}

Tape::Id Tape::max_over_rows(Id a) {
    check_id(a);
    const Tensor2& v = value(a);
    Tensor2 c(1, v.cols);
    std::vector<int> argmax(v.cols, 0);
    for (int j = 0; j < v.cols; ++j) {
        double best = v.at(0, j);
        for (int i = 1; i < v.rows; ++i) {
            if (v.at(i, j) > best) { // strict: ties keep the lowest row index
                best = v.at(i, j);
                argmax[j] = i;
            }
        }
        c.data[j] = best;
    }
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, argmax, id] {
        for (int j = 0; j < nodes_[id].grad.cols; ++j)
            nodes_[a].grad.at(argmax[j], j) += nodes_[id].grad.data[j];
    };
    return id;
}

Tape::Id Tape::sum_all(Id a) {
    check_id(a);
    double s = 0.0;
    for (double x : value(a).data) s += x;
    Tensor2 c(1, 1);
    c.data[0] = s;
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, id] {
        const double g = nodes_[id].grad.data[0];
        for (auto& x : nodes_[a].grad.data) x += g;
    };
    return id;
}

Tape::Id Tape::huber(Id a, double delta) {
    check_id(a);
    Tensor2 c = value(a);
    for (auto& x : c.data) {
        const double ax = std::abs(x);
        x = ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
    }
    Id id = push(std::move(c), nullptr);
    nodes_[id].back = [this, a, delta, id] {
        for (size_t i = 0; i < nodes_[id].grad.size(); ++i) {
            const double x = nodes_[a].value.data[i];
            const double d = std::abs(x) <= delta ? x : (x > 0 ? delta : -delta);
            nodes_[a].grad.data[i] += d * nodes_[id].grad.data[i];
        }
    };
    return id;
}

void Tape::backward(Id root, double seed) {
    check_id(root);
    if (value(root).rows != 1 || value(root).cols != 1)
        throw std::logic_error("backward: root must be scalar (1x1), got " +
                               value(root).shape_str());
    nodes_[root].grad.data[0] += seed;
    for (Id id = root; id >= 0; --id)
        if (nodes_[id].back) nodes_[id].back();
}

void Tape::zero_grads() {
    for (auto& n : nodes_)
        for (auto& g : n.grad.data) g = 0.0;
}

void Tape::accumulate_param_grads(GradMap& out, double scale) const {
    for (const auto& [id, name] : param_leaves_) {
        const Tensor2& g = nodes_[id].grad;
        auto it = out.find(name);
        if (it == out.end()) {
            Tensor2 t = g;
            for (auto& x : t.data) x *= scale;
            out.emplace(name, std::move(t));
        } else {
            for (size_t i = 0; i < g.size(); ++i) it->second.data[i] += scale * g.data[i];
        }
    }
}

} // namespace smt
