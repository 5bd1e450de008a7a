#include "ssw/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ssw/netmodel.hpp"

namespace ssw {

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot open file for hashing: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return fnv1a_hex(buf.str());
}

void RunManifest::add_data_file(const std::string& path) {
    data_file_hashes[path] = hash_file(path);
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["artifact_version"] = kArtifactVersion;
    j["command"] = command;
    j["config"] = config;
    j["data_files"] = data_file_hashes;
    j["seeds"] = seeds;
    return j.dump(2);
}

void RunManifest::write(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw SchemaError("cannot write manifest: " + path);
    f << to_json() << "\n";
}

}  // namespace ssw
