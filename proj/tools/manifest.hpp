#pragma once

// Run manifests: what was run, on which inputs (by content hash), and where
// the outputs went. Hashes are SHA-256 over raw file bytes.

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgda::cli {

inline constexpr const char* kToolVersion = "0.1.0";

namespace fs = std::filesystem;

inline std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed for " + path.string());
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

/// Regular files of a dataset directory (or a single file), sorted by name.
inline std::vector<fs::path> input_files(const fs::path& p) {
    std::vector<fs::path> files;
    if (fs::is_directory(p)) {
        for (const auto& e : fs::directory_iterator(p))
            if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(p);
    }
    return files;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json config) : command_(std::move(command)), config_(std::move(config)) {}

    /// Records every file under `path` with its hash, under a role name.
    void add_input(const std::string& role, const fs::path& path) {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& f : input_files(path))
            files.push_back({{"path", fs::absolute(f).lexically_normal().string()}, {"sha256", sha256_file(f)}});
        inputs_[role] = {{"path", fs::absolute(path).lexically_normal().string()}, {"files", std::move(files)}};
    }

    /// `name` is the path relative to the output directory.
    void add_output(const fs::path& file, std::string name = {}) {
        outputs_[name.empty() ? file.filename().string() : name] = sha256_file(file);
    }

    void write(const fs::path& out_dir, double wall_clock_seconds) const {
        const nlohmann::json j = {{"command", command_},
                                  {"config", config_},
                                  {"inputs", inputs_},
                                  {"outputs", outputs_},
                                  {"output_dir", fs::absolute(out_dir).lexically_normal().string()},
                                  {"version", kToolVersion},
                                  {"timestamp", utc_timestamp()},
                                  {"wall_clock_seconds", wall_clock_seconds}};
        std::ofstream out(out_dir / "manifest.json");
        out << j.dump(2) << '\n';
        if (!out) throw std::runtime_error("cannot write " + (out_dir / "manifest.json").string());
    }

private:
    std::string command_;
    nlohmann::json config_;
    nlohmann::json inputs_ = nlohmann::json::object();
    nlohmann::json outputs_ = nlohmann::json::object();
};

inline nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

/// Loads a run manifest and re-hashes every recorded input and output.
inline nlohmann::json verify_manifest(const fs::path& run_dir) {
    const auto j = read_json(run_dir / "manifest.json");
    for (const auto& [role, input] : j.at("inputs").items())
        for (const auto& f : input.at("files")) {
            const fs::path p = f.at("path").get<std::string>();
            if (sha256_file(p) != f.at("sha256").get<std::string>())
                throw std::runtime_error("input '" + role + "' changed since the run: " + p.string());
        }
    for (const auto& [name, hash] : j.at("outputs").items())
        if (sha256_file(run_dir / name) != hash.get<std::string>())
            throw std::runtime_error("run artifact modified: " + (run_dir / name).string());
    return j;
}

}  // namespace hgda::cli
