#pragma once

#include "smt/param_store.hpp"
#include "smt/tensor.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace smt {

/// Define-by-run reverse-mode tape over Tensor2 values. A fresh tape is
/// built for every forward pass; backward() runs the recorded closures in
/// reverse order, which is a valid reverse topological order by
/// construction. Single-threaded per tape.
class Tape {
public:
    using Id = int;

    Tape() = default;
    // Backward closures capture the tape address; pin it.
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Id constant(Tensor2 v);
    /// Leaf bound to a named parameter; its gradient lands in param_grads().
    Id param(const ParamStore& store, const std::string& name);

    const Tensor2& value(Id id) const { return nodes_[id].value; }
    const Tensor2& grad(Id id) const { return nodes_[id].grad; }

    Id matmul(Id a, Id b);    // A * B
    Id matmul_nt(Id a, Id b); // A * B^T
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id add_rowvec(Id x, Id v); // broadcast 1xC row over all rows of X
    Id scale(Id a, double s);
    Id relu(Id a);
    Id softmax_rows(Id a);
    Id layer_norm(Id x, Id gain, Id bias, double eps = 1e-5);
    Id concat_cols(std::span<const Id> parts);
    Id concat_rows(std::span<const Id> parts);
    Id slice_cols(Id a, int begin, int end);
    Id slice_rows(Id a, int begin, int end);
    Id max_over_rows(Id a);
    Id sum_all(Id a);
    Id huber(Id a, double delta = 1.0); // elementwise Huber of the entries

    /// Reverse pass from a scalar (1x1) root. seed scales the whole
    /// gradient (used for 1/batch averaging across per-sample tapes).
    void backward(Id root, double seed = 1.0);
    void zero_grads();

    /// Accumulate gradients of all param leaves into out (scaled), keyed by
    /// parameter name. Call after backward().
    void accumulate_param_grads(GradMap& out, double scale = 1.0) const;

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor2 value;
        Tensor2 grad;
        std::function<void()> back; // empty for leaves
    };

    Id push(Tensor2 value, std::function<void()> back = {});
    void check_id(Id id) const;

    std::vector<Node> nodes_;
    std::vector<std::pair<Id, std::string>> param_leaves_;
};

} // namespace smt
