#include "mdm/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mdm {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void emit_csv(const std::string& path, const std::string& header,
              const std::vector<std::string>& rows, const std::string& command,
              const std::vector<std::pair<std::string, std::string>>& params,
              std::uint64_t seed) {
    std::string body = header;
    body.push_back('\n');
    for (const auto& r : rows) {
        body += r;
        body.push_back('\n');
    }
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write output file: " + path);
        out << body;
    }
    nlohmann::json manifest;
    manifest["command"] = command;
    manifest["seed"] = seed;
    manifest["version"] = "1.0.0";
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [k, v] : params) p[k] = v;
    manifest["params"] = p;
    manifest["outputs"] = nlohmann::json::object();
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(body)));
    manifest["outputs"][path] = digest;
    std::ofstream mout(path + ".manifest.json", std::ios::binary);
    if (!mout) throw std::runtime_error("cannot write manifest for: " + path);
    mout << manifest.dump(2) << "\n";
}

} // namespace mdm
