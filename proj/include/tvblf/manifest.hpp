#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tvblf {

// Provenance record written next to every artifact set so a result can be
// traced back to the exact configuration that produced it.
struct RunManifest {
    std::string configPath;
    std::string configSha256;
    std::string toolVersion;
    std::string command;                // full invocation as typed
    std::vector<std::string> outputs;   // artifact paths, relative to the manifest
    double wallSeconds = 0.0;

    // Set on `simulate` runs: the certificate verdict that gated the run.
    bool hasCertificate = false;
    bool certificateFeasible = false;
    double certificateAlpha = 0.0;
    double certificateWorstMargin = 0.0;
    bool forced = false;
};

// Lowercase-hex SHA-256 of a file's bytes. Throws ConfigError if the file
// cannot be read.
std::string sha256_file(const std::string& path);

// Lowercase-hex SHA-256 of a byte string.
std::string sha256_bytes(const std::string& bytes);

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace tvblf
