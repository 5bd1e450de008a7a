#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace ssw {

inline constexpr const char* kArtifactVersion = "1.0.0";

// FNV-1a 64-bit content hash, hex-encoded; used to pin input data files in
// run manifests (integrity tag, not a cryptographic digest).
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

// Every command writes a manifest next to its outputs: the command line,
// resolved configuration, data-file hashes and rng seeds.  Outputs reference
// the manifest by name so reruns stay byte-identical.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;           // resolved flags
    std::map<std::string, std::string> data_file_hashes; // path -> hash
    std::map<std::string, std::uint64_t> seeds;

    void add_data_file(const std::string& path);
    std::string to_json() const;
    void write(const std::string& path) const;
};

}  // namespace ssw
