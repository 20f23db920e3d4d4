#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hpcde::cli {

/// Lowercase hex SHA-256 of a byte string.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);
/// Lowercase hex SHA-256 of a file's contents.
[[nodiscard]] std::string file_sha256(const std::filesystem::path& path);

}  // namespace hpcde::cli
