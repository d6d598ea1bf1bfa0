#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace emstress {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(const Sha256& digest);
std::string sha256_file(const std::string& path);

}  // namespace emstress
