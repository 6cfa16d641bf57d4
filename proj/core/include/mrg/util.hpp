#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mrg {

/// Raised for unreadable or malformed input data (exit code 2 in the CLI).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a. Stable across platforms; used for vocab and input hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

/// Hash of a whole file's bytes. Throws DataError if unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes `contents` to `path.tmp` and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

void warn(std::string_view message);

/// When false, warn() is silent. Tests flip this to keep output readable.
void set_warnings_enabled(bool enabled);

}  // namespace mrg
