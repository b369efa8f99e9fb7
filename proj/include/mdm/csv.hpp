#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mdm {

// Shortest decimal that round-trips a double (up to 17 significant digits).
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& data);

// Writes header + rows with LF endings, then a JSON manifest next to the
// file recording the command, parameters, seed, and an FNV-1a digest of the
// output. Wall-time-only knobs (e.g. --jobs) must not appear in `params` so
// reruns are byte-identical regardless of parallelism.
void emit_csv(const std::string& path, const std::string& header,
              const std::vector<std::string>& rows, const std::string& command,
              const std::vector<std::pair<std::string, std::string>>& params,
              std::uint64_t seed);

} // namespace mdm
