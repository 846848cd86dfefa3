#include "exitrate/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "exitrate/errors.hpp"
#include "exitrate/version.hpp"
#include "nlohmann/json.hpp"

namespace exitrate {

std::string format_double(double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw NumericError("failed to format a double");
    }
    return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    std::vector<CsvCell> cells;
    cells.reserve(header.size());
    for (auto& h : header) cells.emplace_back(std::move(h));
    row(cells);
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
    if (cells.size() != columns_) {
        throw PreconditionError("CSV row width does not match the header");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) buffer_ += ',';
        const std::string& t = cells[i].text;
        if (t.find_first_of(",\"\n") != std::string::npos) {
            buffer_ += '"';
            for (char c : t) {
                if (c == '"') buffer_ += '"';
                buffer_ += c;
            }
            buffer_ += '"';
        } else {
            buffer_ += t;
        }
    }
    buffer_ += '\n';
}

void CsvWriter::write(const std::filesystem::path& path) const {
    write_text_file(path, buffer_);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    return sha256_hex(read_text_file(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("io", "cannot open " + path.string() + " for writing");
    }
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) {
        throw Error("io", "failed writing " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw Error("io", "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunManifest::RunManifest(std::string subcommand, std::string config_digest, std::uint64_t seed)
    : subcommand_(std::move(subcommand)), config_digest_(std::move(config_digest)), seed_(seed) {}

void RunManifest::add_file(const std::filesystem::path& out_dir, const std::string& relative_path) {
    const std::filesystem::path full = out_dir / relative_path;
    files_[relative_path] = sha256_file(full);
    sizes_[relative_path] = static_cast<std::uint64_t>(std::filesystem::file_size(full));
}

void RunManifest::add_timing(const std::string& op, double seconds) {
    timings_.emplace_back(op, seconds);
}

void RunManifest::write(const std::filesystem::path& out_dir) const {
    nlohmann::json j;
    j["version"] = kVersion;
    j["subcommand"] = subcommand_;
    j["config_sha256"] = config_digest_;
    j["seed"] = seed_;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [rel, digest] : files_) {
        files.push_back({{"path", rel}, {"sha256", digest}, {"bytes", sizes_.at(rel)}});
    }
    j["files"] = files;
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [op, sec] : timings_) timings[op] = sec;
    j["timings"] = timings;
    write_text_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

} // namespace exitrate
