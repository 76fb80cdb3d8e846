// Minimal deterministic PNG writer (8-bit RGB, zlib-compressed).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nav/render.hpp"

namespace nav::render {

std::vector<uint8_t> encode_png(const Image& img);
void write_png(const Image& img, const std::string& path);

}  // namespace nav::render
