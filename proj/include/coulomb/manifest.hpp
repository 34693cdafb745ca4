#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace coulomb {

inline constexpr const char* kToolVersion = "coulomb-lab 0.1.0";

// Full provenance of a run: configuration digest, seed, schedule, output
// files with content digests. Re-running with identical inputs reproduces
// identical output digests (wall clock is recorded but not part of any
// digest).
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string config_digest;
    std::uint64_t seed = 0;
    nlohmann::json params;
    nlohmann::json schedule;
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
    double wall_clock_sec = 0.0;
    int threads = 1;

    nlohmann::json to_json() const;
    void save(const std::string& path) const;
};

// Digest of a file's bytes (FNV-1a 64, hex).
std::string file_digest(const std::string& path);

// Run directory keyed by name and config digest; created if absent.
std::string run_directory(const std::string& out_root, const std::string& name,
                          const std::string& config_digest);

}  // namespace coulomb
