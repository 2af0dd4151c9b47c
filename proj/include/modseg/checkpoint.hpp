#pragma once

#include <filesystem>

#include "modseg/model.hpp"

namespace modseg {

// Single-file checkpoint: a text header (format tag, config, parameter
// table with name/shape/offset) followed by the payload of little-endian
// 32-bit floats in declaration order and a trailing 64-bit FNV-1a checksum
// of the payload. Write->read round trips are bitwise exact.
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace modseg
