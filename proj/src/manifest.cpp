#include "coulomb/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "coulomb/geometry.hpp"
#include "coulomb/io_util.hpp"

namespace coulomb {

nlohmann::json RunManifest::to_json() const {
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& [path, digest] : outputs) outs.push_back({{"path", path}, {"digest", digest}});
    return {{"schema", "coulomb-lab/manifest-v1"},
            {"tool_version", tool_version},
            {"config_digest", config_digest},
            {"seed", seed},
            {"params", params},
            {"schedule", schedule},
            {"outputs", outs},
            {"wall_clock_sec", wall_clock_sec},
            {"threads", threads}};
}

void RunManifest::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error(Errc::OutOfDomain, "RunManifest: cannot write " + path);
    f << to_json().dump(2) << "\n";
}

std::string file_digest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::MissingArtifact, "file_digest: cannot read " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof buf);
        h = fnv1a64(buf, static_cast<std::size_t>(f.gcount()), h);
    }
    return hex64(h);
}

std::string run_directory(const std::string& out_root, const std::string& name,
                          const std::string& config_digest) {
    namespace fs = std::filesystem;
    const std::string dir =
        out_root + "/" + name + "-" + config_digest.substr(0, 8);
    fs::create_directories(dir);
    return dir;
}

}  // namespace coulomb
