#include "asalpp/io/gif_writer.hpp"

#include <fstream>
#include <unordered_map>

#include "asalpp/core/errors.hpp"

namespace asalpp {

namespace {

void put_u16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

std::uint8_t quantize_332(const std::uint8_t* rgb) {
  int r = rgb[0] * 7 / 255;
  int g = rgb[1] * 7 / 255;
  int b = rgb[2] * 3 / 255;
  return static_cast<std::uint8_t>((r << 5) | (g << 2) | b);
}

/// GIF-flavored LZW over 8-bit indices, packed LSB-first into <=255-byte
/// sub-blocks.
void lzw_encode(const std::vector<std::uint8_t>& indices, std::vector<std::uint8_t>& out) {
  constexpr int kMinCodeSize = 8;
  constexpr int kClear = 1 << kMinCodeSize;   // 256
  constexpr int kEnd = kClear + 1;            // 257
  out.push_back(kMinCodeSize);

  std::vector<std::uint8_t> block;
  std::uint32_t bit_buffer = 0;
  int bit_count = 0;
  int code_size = kMinCodeSize + 1;
  auto emit = [&](int code) {
    bit_buffer |= static_cast<std::uint32_t>(code) << bit_count;
    bit_count += code_size;
    while (bit_count >= 8) {
      block.push_back(static_cast<std::uint8_t>(bit_buffer & 0xFF));
      bit_buffer >>= 8;
      bit_count -= 8;
      if (block.size() == 255) {
        out.push_back(255);
        out.insert(out.end(), block.begin(), block.end());
        block.clear();
      }
    }
  };

  std::unordered_map<std::uint32_t, int> dict;
  int next_code = kEnd + 1;
  emit(kClear);
  int prefix = -1;
  for (std::uint8_t byte : indices) {
    if (prefix < 0) {
      prefix = byte;
      continue;
    }
    std::uint32_t key = (static_cast<std::uint32_t>(prefix) << 8) | byte;
    auto it = dict.find(key);
    if (it != dict.end()) {
      prefix = it->second;
      continue;
    }
    emit(prefix);
    dict.emplace(key, next_code);
    if (next_code < 4096) {
      if (next_code == (1 << code_size)) ++code_size;
      ++next_code;
    }
    if (next_code >= 4096) {
      emit(kClear);
      dict.clear();
      next_code = kEnd + 1;
      code_size = kMinCodeSize + 1;
    }
    prefix = byte;
  }
  if (prefix >= 0) emit(prefix);
  emit(kEnd);
  if (bit_count > 0) block.push_back(static_cast<std::uint8_t>(bit_buffer & 0xFF));
  if (!block.empty()) {
    out.push_back(static_cast<std::uint8_t>(block.size()));
    out.insert(out.end(), block.begin(), block.end());
  }
  out.push_back(0);  // block terminator
}

}  // namespace

void gif_write_file(const std::vector<Frame>& frames, const std::string& path, int delay_cs) {
  if (frames.empty()) throw IoError("gif: no frames");
  const int w = frames.front().width;
  const int h = frames.front().height;
  for (const auto& f : frames)
    if (f.width != w || f.height != h) throw IoError("gif: frames must share dimensions");

  std::vector<std::uint8_t> out;
  const char* header = "GIF89a";
  out.insert(out.end(), header, header + 6);
  put_u16(out, w);
  put_u16(out, h);
  out.push_back(0xF7);  // global table, 8-bit resolution, 256 entries
  out.push_back(0);     // background color
  out.push_back(0);     // aspect ratio

  for (int i = 0; i < 256; ++i) {
    out.push_back(static_cast<std::uint8_t>(((i >> 5) & 7) * 255 / 7));
    out.push_back(static_cast<std::uint8_t>(((i >> 2) & 7) * 255 / 7));
    out.push_back(static_cast<std::uint8_t>((i & 3) * 255 / 3));
  }

  // NETSCAPE loop extension: repeat forever.
  const std::uint8_t netscape[] = {0x21, 0xFF, 0x0B, 'N', 'E', 'T', 'S', 'C', 'A', 'P',
                                   'E',  '2',  '.',  '0', 0x03, 0x01, 0x00, 0x00, 0x00};
  out.insert(out.end(), netscape, netscape + sizeof(netscape));

  std::vector<std::uint8_t> indices(static_cast<std::size_t>(w) * h);
  for (const auto& frame : frames) {
    out.push_back(0x21);
    out.push_back(0xF9);
    out.push_back(0x04);
    out.push_back(0x04);  // do not dispose
    put_u16(out, delay_cs);
    out.push_back(0);  // no transparency
    out.push_back(0);

    out.push_back(0x2C);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, w);
    put_u16(out, h);
    out.push_back(0);  // no local color table

    for (std::size_t p = 0; p < indices.size(); ++p)
      indices[p] = quantize_332(frame.rgb.data() + 3 * p);
    lzw_encode(indices, out);
  }
  out.push_back(0x3B);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path);
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed: " + path);
}

}  // namespace asalpp
