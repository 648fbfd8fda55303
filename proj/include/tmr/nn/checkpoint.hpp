#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tmr::nn {

/// Named float tensors, written little-endian. Layout:
///   magic "TMRW", u32 tensor count, then per tensor:
///   u16 name length, name bytes, u64 element count, f32 data.
void write_weights(const std::filesystem::path& file,
                   const std::vector<std::pair<std::string, const std::vector<float>*>>& tensors);

std::map<std::string, std::vector<float>> read_weights(const std::filesystem::path& file);

/// FNV-1a 64 over a file's bytes, rendered as 16 hex chars. Used to key
/// descriptor caches on the producing model.
std::string file_checksum(const std::filesystem::path& file);

}  // namespace tmr::nn
