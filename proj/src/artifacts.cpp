#include "smt/artifacts.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace smt {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read artifact: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

ArtifactWriter::ArtifactWriter(std::string out_dir) : out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
}

void ArtifactWriter::write(const std::string& name, const std::string& content) {
    const fs::path p = fs::path(out_dir_) / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write artifact: " + p.string());
    out << content;
    record(name);
}

void ArtifactWriter::record(const std::string& name) {
    for (const auto& n : names_)
        if (n == name) return;
    names_.push_back(name);
}

void ArtifactWriter::log(const std::string& line) {
    std::ofstream out(fs::path(out_dir_) / "run.log", std::ios::app);
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
    out << stamp << "Z " << line << "\n";
}

void ArtifactWriter::write_manifest() {
    nlohmann::json entries = nlohmann::json::array();
    std::vector<std::string> sorted = names_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& name : sorted) {
        const std::string bytes = read_file(fs::path(out_dir_) / name);
        char hash[32];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes)));
        entries.push_back({{"path", name}, {"bytes", bytes.size()}, {"fnv1a64", hash}});
    }
    nlohmann::json root = {{"artifacts", entries}};
    std::ofstream out(fs::path(out_dir_) / "manifest.json", std::ios::binary | std::ios::trunc);
    out << root.dump(2) << "\n";
}

CsvBuilder::CsvBuilder(const std::vector<std::string>& header) : width_(header.size()) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) text_ += ",";
        text_ += header[i];
    }
    text_ += "\n";
}

void CsvBuilder::add_row(const std::vector<double>& cells) {
    std::vector<std::string> raw;
    raw.reserve(cells.size());
    for (double v : cells) raw.push_back(format_double(v));
    add_row_raw(raw);
}

void CsvBuilder::add_row_raw(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw std::invalid_argument("csv row width mismatch");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ",";
        text_ += cells[i];
    }
    text_ += "\n";
}

} // namespace smt
