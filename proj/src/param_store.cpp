#include "smt/param_store.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace smt {

namespace {
constexpr char kMagic[8] = {'S', 'M', 'T', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void write_tensor(std::ostream& os, const Tensor2& t) {
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

void read_tensor(std::istream& is, Tensor2& t) {
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
}
} // namespace

void ParamStore::add(const std::string& name, Tensor2 value, bool trainable) {
    if (entries_.count(name))
        throw std::logic_error("ParamStore: duplicate parameter name " + name);
    Entry e;
    e.m = Tensor2(value.rows, value.cols);
    e.v = Tensor2(value.rows, value.cols);
    e.value = std::move(value);
    e.trainable = trainable;
    entries_.emplace(name, std::move(e));
}

const Tensor2& ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::logic_error("ParamStore: unknown parameter " + name);
    return it->second.value;
}

Tensor2& ParamStore::mutable_value(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::logic_error("ParamStore: unknown parameter " + name);
    return it->second.value;
}

void ParamStore::set_trainable(const std::string& name, bool trainable) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::logic_error("ParamStore: unknown parameter " + name);
    it->second.trainable = trainable;
}

bool ParamStore::trainable(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::logic_error("ParamStore: unknown parameter " + name);
    return it->second.trainable;
}

void ParamStore::adam_step(const GradMap& grads, double lr, double beta1, double beta2,
                           double eps) {
    ++adam_t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
    for (auto& [name, e] : entries_) {
        if (!e.trainable) continue;
        auto git = grads.find(name);
        if (git == grads.end())
            throw std::logic_error("adam_step: missing gradient for trainable parameter " +
                                   name);
        const Tensor2& g = git->second;
        require_shape(g.same_shape(e.value), "gradient shape for " + name);
        for (size_t i = 0; i < e.value.size(); ++i) {
            e.m.data[i] = beta1 * e.m.data[i] + (1.0 - beta1) * g.data[i];
            e.v.data[i] = beta2 * e.v.data[i] + (1.0 - beta2) * g.data[i] * g.data[i];
            const double mhat = e.m.data[i] / bc1;
            const double vhat = e.v.data[i] / bc2;
            e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void ParamStore::absorb(const ParamStore& src) {
    for (const auto& [name, e] : src.entries_) {
        auto it = entries_.find(name);
        if (it == entries_.end() || !it->second.value.same_shape(e.value)) continue;
        it->second = e;
    }
}

void ParamStore::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(os, 1u); // format version
    write_pod<int64_t>(os, adam_t_);
    write_pod<uint32_t>(os, static_cast<uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
        write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint32_t>(os, static_cast<uint32_t>(e.value.rows));
        write_pod<uint32_t>(os, static_cast<uint32_t>(e.value.cols));
        write_pod<uint8_t>(os, e.trainable ? 1 : 0);
        write_tensor(os, e.value);
        write_tensor(os, e.m);
        write_tensor(os, e.v);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const auto version = read_pod<uint32_t>(is);
    if (version != 1u)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    ParamStore store;
    store.adam_t_ = read_pod<int64_t>(is);
    const auto count = read_pod<uint32_t>(is);
    for (uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto rows = static_cast<int>(read_pod<uint32_t>(is));
        const auto cols = static_cast<int>(read_pod<uint32_t>(is));
        const bool trainable = read_pod<uint8_t>(is) != 0;
        Entry e;
        e.value = Tensor2(rows, cols);
        e.m = Tensor2(rows, cols);
        e.v = Tensor2(rows, cols);
        e.trainable = trainable;
        read_tensor(is, e.value);
        read_tensor(is, e.m);
        read_tensor(is, e.v);
        store.entries_.emplace(std::move(name), std::move(e));
    }
    return store;
}

void ParamStore::add_gaussian(const std::string& name, int rows, int cols, double stddev,
                              std::mt19937_64& rng, bool trainable) {
    Tensor2 t(rows, cols);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& x : t.data) x = dist(rng);
    add(name, std::move(t), trainable);
}

void ParamStore::add_zeros(const std::string& name, int rows, int cols, bool trainable) {
    add(name, Tensor2(rows, cols), trainable);
}

void ParamStore::add_const(const std::string& name, int rows, int cols, double value,
                           bool trainable) {
    Tensor2 t(rows, cols);
    for (auto& x : t.data) x = value;
    add(name, std::move(t), trainable);
}

} // namespace smt
