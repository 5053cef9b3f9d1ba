#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bankaudit {

// Throws Error(IoFailure) when the file cannot be read or written.
std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, std::string_view text);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace bankaudit
