#include "dlab/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dlab::manifest {

std::string hash_bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot hash missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        const std::streamsize n = is.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (n < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    char out[20];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_manifest(const Manifest& m, const std::string& path) {
    nlohmann::json j;
    j["tool_version"] = m.tool_version;
    j["command"] = m.command;
    j["config"] = m.config_echo;
    j["inputs"] = m.input_hashes;
    j["outputs"] = m.output_hashes;
    j["seeds"] = m.seeds;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write manifest: " + path);
    os << j.dump(1) << "\n";
}

std::map<std::string, std::string> hash_tree(const std::string& dir) {
    namespace fs = std::filesystem;
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir).generic_string();
        out[rel] = hash_file(entry.path().string());
    }
    return out;
}

void write_timings(const std::map<std::string, double>& seconds, const std::string& path) {
    nlohmann::json j = seconds;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write timings: " + path);
    os << j.dump(1) << "\n";
}

}  // namespace dlab::manifest
