#pragma once

#include <string>
#include <vector>

#include "asalpp/core/frame.hpp"

namespace asalpp {

/// Writes an animated GIF (infinite loop) from RGB frames using a fixed
/// 3-3-2 color cube, so no external tool is needed and output bytes are
/// deterministic. `delay_cs` is per-frame delay in centiseconds.
void gif_write_file(const std::vector<Frame>& frames, const std::string& path, int delay_cs = 4);

}  // namespace asalpp
