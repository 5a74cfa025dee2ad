#pragma once

#include <string>

#include "leafpipe/types.hpp"

namespace leafpipe {

// Reads an 8-bit PNG into a float tensor (value / 255). Grayscale and palette
// images are expanded to RGB; an alpha channel is stripped.
ImageTensor read_png(const std::string& path);

// Writes a 1-channel (grayscale) or 3-channel (RGB) tensor as an 8-bit PNG.
// Values are clamped to [0,1] and quantized as round(value * 255). Output
// bytes are deterministic for identical inputs.
void write_png(const ImageTensor& image, const std::string& path);

}  // namespace leafpipe
