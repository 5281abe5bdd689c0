#pragma once

// Run manifests: what produced a set of output files, and their digests.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace rcollatz {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// UTC, second resolution, e.g. 2026-01-31T12:00:00Z.
std::string utc_timestamp();

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;  // arguments after the program name
    nlohmann::json config;
    nlohmann::json seeds;
    std::string version;
    std::string started;
    std::string finished;
    std::map<std::string, std::string> outputs;  // file name -> sha256
    nlohmann::json status = nlohmann::json::object();

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    /// Digests every file in `outputs` found in `dir`, then writes manifest.json there.
    void finalize(const std::filesystem::path& dir);
};

}  // namespace rcollatz
