#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace smt {

/// Formats a double with 17 significant digits so reruns are byte-identical
/// and values round-trip exactly.
std::string format_double(double v);

/// FNV-1a 64-bit hash of a byte string.
uint64_t fnv1a64(const std::string& bytes);

/// Collects run outputs and writes `manifest.json` listing every artifact
/// with its size and content hash. Timestamps never appear in artifacts;
/// they go to the sidecar run.log only.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::string out_dir);

    const std::string& dir() const { return out_dir_; }

    /// Writes `name` (a path relative to the output directory) and records
    /// it for the manifest. Parent directories are created as needed.
    void write(const std::string& name, const std::string& content);

    /// Records an already-written file (e.g. a checkpoint saved directly).
    void record(const std::string& name);

    /// Appends a timestamped line to run.log (not part of the manifest).
    void log(const std::string& line);

    void write_manifest();

private:
    std::string out_dir_;
    std::vector<std::string> names_;
};

/// Deterministic CSV assembly: header once, then rows of %.17g cells.
class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header);
    void add_row(const std::vector<double>& cells);
    void add_row_raw(const std::vector<std::string>& cells);
    const std::string& text() const { return text_; }

private:
    size_t width_;
    std::string text_;
};

} // namespace smt
