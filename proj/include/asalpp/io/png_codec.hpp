#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asalpp/core/frame.hpp"

namespace asalpp {

/// Encodes an RGB frame as an 8-bit truecolor PNG (non-interlaced, filter
/// None, fixed deflate settings). The byte stream is deterministic for a
/// given frame, which the rerun-identical artifact guarantees rely on.
std::vector<std::uint8_t> png_encode(const Frame& frame);

/// Decodes 8-bit gray / gray+alpha / RGB / RGBA non-interlaced PNGs into an
/// RGB frame (alpha dropped). Throws IoError on anything else.
Frame png_decode(const std::uint8_t* data, std::size_t size);
Frame png_decode(const std::vector<std::uint8_t>& data);

void png_write_file(const Frame& frame, const std::string& path);
Frame png_read_file(const std::string& path);

}  // namespace asalpp
