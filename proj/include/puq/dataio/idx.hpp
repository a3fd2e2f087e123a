#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "puq/dataio/dataset.hpp"

namespace puq {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Big-endian IDX image/label pair; pixels scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
Dataset decode_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

}  // namespace puq
