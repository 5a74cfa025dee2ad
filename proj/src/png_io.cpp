#include "leafpipe/png_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

namespace leafpipe {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageTensor read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw DataError("png: cannot open '" + path + "'");

    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw DataError("png: '" + path + "' is not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("png: failed to allocate read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("png: failed to allocate info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png: error while reading '" + path + "'");
    }

    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int channels = static_cast<int>(png_get_channels(png, info));
    if (channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png: '" + path + "' did not decode to RGB");
    }

    std::vector<png_byte> rowbuf(static_cast<size_t>(width) * 3);
    ImageTensor image(height, width, 3);
    for (int y = 0; y < height; ++y) {
        png_read_row(png, rowbuf.data(), nullptr);
        for (size_t i = 0; i < rowbuf.size(); ++i) {
            image.data[static_cast<size_t>(y) * rowbuf.size() + i] =
                static_cast<float>(rowbuf[i]) / 255.0f;
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const ImageTensor& image, const std::string& path) {
    if (image.channels != 1 && image.channels != 3) {
        throw DataError("png: only 1- or 3-channel images can be written, got " +
                        std::to_string(image.channels));
    }
    if (image.height <= 0 || image.width <= 0 ||
        image.data.size() != image.value_count()) {
        throw DataError("png: malformed image tensor for '" + path + "'");
    }

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw DataError("png: cannot write '" + path + "'");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("png: failed to allocate write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("png: failed to allocate info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("png: error while writing '" + path + "'");
    }

    png_init_io(png, file.get());
    const int color_type =
        image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const size_t row_values = static_cast<size_t>(image.width) * image.channels;
    std::vector<png_byte> rowbuf(row_values);
    for (int y = 0; y < image.height; ++y) {
        for (size_t i = 0; i < row_values; ++i) {
            float v = image.data[static_cast<size_t>(y) * row_values + i];
            v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
            rowbuf[i] = static_cast<png_byte>(std::lround(v * 255.0f));
        }
        png_write_row(png, rowbuf.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace leafpipe
