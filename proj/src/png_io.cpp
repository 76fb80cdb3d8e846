#include "nav/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nav::render {

namespace {

void push_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

void push_chunk(std::vector<uint8_t>& out, const char type[4],
                const std::vector<uint8_t>& data) {
  push_u32_be(out, uint32_t(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uint32_t crc =
      uint32_t(::crc32(0, out.data() + start, uInt(out.size() - start)));
  push_u32_be(out, crc);
}

}  // namespace

std::vector<uint8_t> encode_png(const Image& img) {
  // Scanlines with filter byte 0 (none).
  std::vector<uint8_t> raw;
  raw.reserve(size_t(img.height) * (1 + size_t(img.width) * 3));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = img.pixels.data() + size_t(y) * img.width * 3;
    raw.insert(raw.end(), row, row + size_t(img.width) * 3);
  }

  uLongf comp_len = compressBound(uLong(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png: zlib compression failed");
  comp.resize(comp_len);

  std::vector<uint8_t> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<uint8_t> ihdr;
  push_u32_be(ihdr, uint32_t(img.width));
  push_u32_be(ihdr, uint32_t(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  push_chunk(out, "IHDR", ihdr);
  push_chunk(out, "IDAT", comp);
  push_chunk(out, "IEND", {});
  return out;
}

void write_png(const Image& img, const std::string& path) {
  const std::vector<uint8_t> bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("png: cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace nav::render
