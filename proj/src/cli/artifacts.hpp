#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "viscoflow/cli.hpp"

namespace viscoflow::cli {

using json = nlohmann::ordered_json;

std::string sha256_file(const std::string& path);

// manifest.json in the output directory.  begin() writes it before any
// computation; finish() rewrites it with the artifact checksums.
class Manifest {
public:
    Manifest(std::string out_dir, Mode mode, const Config& cfg, bool strict);

    void begin(const json& parameters);
    // Writes a text artifact and records it.
    void write(const std::string& name, const std::string& content);
    // Records an artifact written elsewhere (path relative to the output directory).
    void record(const std::string& name);
    std::string path(const std::string& name) const;

    void finish(const std::string& status, const std::vector<std::string>& violations);

private:
    void flush(const std::string& status, const std::vector<std::string>& violations, bool checksums) const;

    std::string out_dir_;
    json doc_;
    std::vector<std::string> artifacts_;
};

void write_file(const std::string& path, const std::string& content);

}  // namespace viscoflow::cli
