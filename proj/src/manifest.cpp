#include "tvblf/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

#include "tvblf/errors.hpp"

namespace tvblf {
namespace {

std::string hex_digest(const unsigned char* digest, unsigned int len) {
    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace

std::string sha256_bytes(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                   nullptr) != 1)
        throw Error("SHA-256 digest failed");
    return hex_digest(digest, len);
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path + " for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_bytes(buf.str());
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json j;
    j["configPath"] = manifest.configPath;
    j["configSha256"] = manifest.configSha256;
    j["toolVersion"] = manifest.toolVersion;
    j["command"] = manifest.command;
    j["outputs"] = manifest.outputs;
    j["wallSeconds"] = manifest.wallSeconds;
    if (manifest.hasCertificate) {
        j["certificate"] = {{"feasible", manifest.certificateFeasible},
                            {"alpha", manifest.certificateAlpha},
                            {"worstMargin", manifest.certificateWorstMargin},
                            {"forced", manifest.forced}};
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

}  // namespace tvblf
