#pragma once

#include "smt/tensor.hpp"

#include <map>
#include <random>
#include <string>

namespace smt {

using GradMap = std::map<std::string, Tensor2>;

/// Named parameter tensors with per-parameter trainable flags and Adam
/// moment state. Insertion uses an ordered map so iteration (and hence
/// optimizer application and serialization) is deterministic.
class ParamStore {
public:
    struct Entry {
        Tensor2 value;
        Tensor2 m; // Adam first moment
        Tensor2 v; // Adam second moment
        bool trainable = true;
    };

    void add(const std::string& name, Tensor2 value, bool trainable = true);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    const Tensor2& get(const std::string& name) const;
    Tensor2& mutable_value(const std::string& name);
    void set_trainable(const std::string& name, bool trainable);
    bool trainable(const std::string& name) const;

    const std::map<std::string, Entry>& entries() const { return entries_; }
    long adam_step_count() const { return adam_t_; }

    /// One Adam update over all trainable parameters. Frozen parameters are
    /// skipped even if a gradient is supplied; a trainable parameter without
    /// a gradient is a contract violation.
    void adam_step(const GradMap& grads, double lr, double beta1 = 0.9,
                   double beta2 = 0.999, double eps = 1e-8);

    /// Copies value, Adam moments and trainable flag for every parameter of
    /// `src` whose name and shape match an entry here; other entries keep
    /// their current (freshly initialized) state.
    void absorb(const ParamStore& src);

    void save(const std::string& path) const;
    static ParamStore load(const std::string& path);

    /// Gaussian init helper used by all modules.
    void add_gaussian(const std::string& name, int rows, int cols, double stddev,
                      std::mt19937_64& rng, bool trainable = true);
    void add_zeros(const std::string& name, int rows, int cols, bool trainable = true);
    void add_const(const std::string& name, int rows, int cols, double value,
                   bool trainable = true);

private:
    std::map<std::string, Entry> entries_;
    long adam_t_ = 0;
};

} // namespace smt
