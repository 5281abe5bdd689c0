#include "rcollatz/manifest.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "rcollatz/errors.hpp"

namespace rcollatz {

namespace {

std::string digest_hex(const unsigned char* data, unsigned len) {
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", data[i]);
        out += buf;
    }
    return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    return digest_hex(md.data(), len);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    return {{"command", command}, {"argv", argv},       {"config", config},
            {"seeds", seeds},     {"version", version}, {"started", started},
            {"finished", finished}, {"outputs", outputs}, {"status", status}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        m.config = j.value("config", nlohmann::json::object());
        m.seeds = j.value("seeds", nlohmann::json());
        m.version = j.value("version", "");
        m.started = j.value("started", "");
        m.finished = j.value("finished", "");
        m.outputs = j.value("outputs", std::map<std::string, std::string>{});
        m.status = j.value("status", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

void RunManifest::finalize(const std::filesystem::path& dir) {
    for (auto& [name, digest] : outputs) digest = sha256_file(dir / name);
    finished = utc_timestamp();
    std::ofstream out(dir / "manifest.json");
    out << to_json().dump(2) << '\n';
}

}  // namespace rcollatz
