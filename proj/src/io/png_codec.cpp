#include "asalpp/io/png_codec.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "asalpp/core/errors.hpp"

namespace asalpp {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t size) {
  put_u32(out, static_cast<std::uint32_t>(size));
  std::size_t crc_begin = out.size();
  out.insert(out.end(), type, type + 4);
  if (size > 0) out.insert(out.end(), data, data + size);
  std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0L, out.data() + crc_begin, static_cast<uInt>(out.size() - crc_begin)));
  put_u32(out, crc);
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<std::uint8_t> png_encode(const Frame& frame) {
  if (frame.width <= 0 || frame.height <= 0) throw IoError("png_encode: empty frame");

  const std::size_t row = static_cast<std::size_t>(frame.width) * 3;
  std::vector<std::uint8_t> raw((row + 1) * static_cast<std::size_t>(frame.height));
  for (int y = 0; y < frame.height; ++y) {
    std::uint8_t* dst = raw.data() + static_cast<std::size_t>(y) * (row + 1);
    *dst++ = 0;  // filter: None
    std::memcpy(dst, frame.rgb.data() + static_cast<std::size_t>(y) * row, row);
  }

  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (::compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("png_encode: deflate failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kSignature, kSignature + 8);
  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(frame.width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(frame.width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(frame.width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(frame.width);
  ihdr[4] = static_cast<std::uint8_t>(frame.height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(frame.height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(frame.height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(frame.height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // truecolor
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // interlace
  append_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  append_chunk(out, "IDAT", compressed.data(), compressed.size());
  append_chunk(out, "IEND", nullptr, 0);
  return out;
}

Frame png_decode(const std::uint8_t* data, std::size_t size) {
  if (size < 8 || std::memcmp(data, kSignature, 8) != 0) throw IoError("png: bad signature");

  std::size_t pos = 8;
  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  std::vector<std::uint8_t> idat;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 8 <= size && !saw_iend) {
    std::uint32_t len = read_u32(data + pos);
    if (pos + 12 + len > size) throw IoError("png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(data + pos + 4);
    const std::uint8_t* payload = data + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("png: bad IHDR");
      width = static_cast<int>(read_u32(payload));
      height = static_cast<int>(read_u32(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      if (payload[12] != 0) throw IoError("png: interlaced images unsupported");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || width <= 0 || height <= 0) throw IoError("png: missing IHDR");
  if (bit_depth != 8) throw IoError("png: only 8-bit depth supported");

  int channels = 0;
  switch (color_type) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    case 4: channels = 2; break;
    case 6: channels = 4; break;
    default: throw IoError("png: unsupported color type " + std::to_string(color_type));
  }

  const std::size_t row = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint8_t> raw((row + 1) * static_cast<std::size_t>(height));
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (::uncompress(raw.data(), &raw_size, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_size != raw.size())
    throw IoError("png: inflate failed");

  // Undo per-row filters in place.
  std::vector<std::uint8_t> prev(row, 0);
  std::vector<std::uint8_t> line(row);
  Frame frame(width, height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (row + 1);
    std::uint8_t filter = src[0];
    std::memcpy(line.data(), src + 1, row);
    for (std::size_t i = 0; i < row; ++i) {
      int a = i >= static_cast<std::size_t>(channels) ? line[i - channels] : 0;
      int b = prev[i];
      int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
      switch (filter) {
        case 0: break;
        case 1: line[i] = static_cast<std::uint8_t>(line[i] + a); break;
        case 2: line[i] = static_cast<std::uint8_t>(line[i] + b); break;
        case 3: line[i] = static_cast<std::uint8_t>(line[i] + (a + b) / 2); break;
        case 4: line[i] = static_cast<std::uint8_t>(line[i] + paeth(a, b, c)); break;
        default: throw IoError("png: unknown filter type");
      }
    }
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* px = line.data() + static_cast<std::size_t>(x) * channels;
      std::uint8_t* out = frame.pixel(x, y);
      switch (color_type) {
        case 0: out[0] = out[1] = out[2] = px[0]; break;
        case 4: out[0] = out[1] = out[2] = px[0]; break;
        case 2:
        case 6:
          out[0] = px[0];
          out[1] = px[1];
          out[2] = px[2];
          break;
      }
    }
    prev = line;
  }
  return frame;
}

Frame png_decode(const std::vector<std::uint8_t>& data) { return png_decode(data.data(), data.size()); }

void png_write_file(const Frame& frame, const std::string& path) {
  std::vector<std::uint8_t> bytes = png_encode(frame);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Frame png_read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return png_decode(bytes);
}

}  // namespace asalpp
