#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace quretec {

/// Bad or inconsistent input (file contents, offsets, ids). The CLI maps
/// this to exit code 1; anything else escaping a command is exit code 2.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// FNV-1a 64-bit content hash. Used for input fingerprints in report
/// headers and for checkpoint/stopword integrity checks.
std::uint64_t fnv1a64(std::string_view data);

/// Hash rendered as fixed-width lowercase hex.
std::string fnv1a64_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes via a sibling temp file and renames into place, so a failed
/// command never leaves a partial output behind.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

}  // namespace quretec
