#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace exitrate {

/// Shortest round-trip decimal form of a double (locale-free).
std::string format_double(double v);

/// One CSV cell; numbers go through format_double, strings are quoted only
/// when they contain a delimiter.
struct CsvCell {
    std::string text;

    CsvCell(double v) : text(format_double(v)) {}
    CsvCell(int v) : text(std::to_string(v)) {}
    CsvCell(std::int64_t v) : text(std::to_string(v)) {}
    CsvCell(std::size_t v) : text(std::to_string(v)) {}
    CsvCell(const char* s) : text(s) {}
    CsvCell(std::string s) : text(std::move(s)) {}
};

/// Header-row CSV writer, comma separated, '.' decimal separator.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(const std::vector<CsvCell>& cells);
    const std::string& str() const noexcept { return buffer_; }
    void write(const std::filesystem::path& path) const;

private:
    std::size_t columns_;
    std::string buffer_;
};

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);
/// SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Output inventory for one run: every emitted file with a content digest,
/// plus timings and identification fields.
class RunManifest {
public:
    RunManifest(std::string subcommand, std::string config_digest, std::uint64_t seed);

    /// Registers an already-written file (path relative to the output dir).
    void add_file(const std::filesystem::path& out_dir, const std::string& relative_path);
    void add_timing(const std::string& op, double seconds);

    /// Serializes and writes manifest.json in out_dir (the manifest itself is
    /// not part of the inventory).
    void write(const std::filesystem::path& out_dir) const;

    const std::map<std::string, std::string>& files() const noexcept { return files_; }

private:
    std::string subcommand_;
    std::string config_digest_;
    std::uint64_t seed_;
    std::map<std::string, std::string> files_;        // relative path -> sha256
    std::map<std::string, std::uint64_t> sizes_;      // relative path -> bytes
    std::vector<std::pair<std::string, double>> timings_;
};

} // namespace exitrate
