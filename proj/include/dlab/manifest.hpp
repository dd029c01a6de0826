#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dlab::manifest {

// FNV-1a 64-bit content hash, hex-encoded
std::string hash_file(const std::string& path);
std::string hash_bytes(const void* data, std::size_t len);

// Manifest of one command run: config echo, input/output content hashes and
// seeds. Timings go to a separate timings.json so manifests (and whole output
// trees minus timings) are bit-reproducible.
struct Manifest {
    std::string tool_version;
    std::string command;
    std::map<std::string, std::string> config_echo;
    std::map<std::string, std::string> input_hashes;
    std::map<std::string, std::string> output_hashes;
    std::vector<std::uint64_t> seeds;
};

void write_manifest(const Manifest& m, const std::string& path);

// hashes every regular file under dir (relative paths), sorted
std::map<std::string, std::string> hash_tree(const std::string& dir);

void write_timings(const std::map<std::string, double>& seconds, const std::string& path);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dlab::manifest
