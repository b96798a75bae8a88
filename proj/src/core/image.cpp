#include "image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "error.hpp"

namespace nsplat {

namespace {
struct FileCloser {
    void operator()(FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;
}  // namespace

ImageBuffer read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(ErrorCode::io, "cannot open '" + path + "' for reading");

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        fail(ErrorCode::parse, "'" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::parse, "failed to decode PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels == 2) {  // gray+alpha after expansion quirks
        png_set_strip_alpha(png);
        png_read_update_info(png, info);
        channels = png_get_channels(png, info);
    }
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::parse, "unsupported PNG channel count in '" + path + "'");
    }

    ImageBuffer img = ImageBuffer::make(static_cast<int>(w), static_cast<int>(h), channels);
    std::vector<png_byte> row(static_cast<size_t>(w) * channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (size_t i = 0; i < row.size(); ++i)
            img.data[static_cast<size_t>(y) * w * channels + i] = row[i] / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ImageBuffer& img) {
    if (img.channels != 1 && img.channels != 3)
        fail(ErrorCode::invalid_arg, "write_png: channels must be 1 or 3");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(ErrorCode::io, "cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::io, "failed to encode PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (size_t i = 0; i < row.size(); ++i) {
            float v = img.data[static_cast<size_t>(y) * img.width * img.channels + i];
            row[i] = static_cast<png_byte>(std::lround(std::fmin(std::fmax(v, 0.0f), 1.0f) * 255.0f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageBuffer read_pfm(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(ErrorCode::io, "cannot open '" + path + "' for reading");

    char tag[3] = {0, 0, 0};
    if (std::fscanf(fp.get(), "%2s", tag) != 1)
        fail(ErrorCode::parse, "PFM header missing in '" + path + "'");
    int channels;
    if (std::strcmp(tag, "PF") == 0) channels = 3;
    else if (std::strcmp(tag, "Pf") == 0) channels = 1;
    else fail(ErrorCode::parse, "PFM tag must be 'PF' or 'Pf' in '" + path + "'");

    int w = 0, h = 0;
    double scale = 0;
    if (std::fscanf(fp.get(), "%d %d %lf", &w, &h, &scale) != 3 || w <= 0 || h <= 0)
        fail(ErrorCode::parse, "bad PFM dimensions in '" + path + "'");
    if (scale >= 0) fail(ErrorCode::parse, "big-endian PFM is not supported ('" + path + "')");
    std::fgetc(fp.get());  // single whitespace after the header

    ImageBuffer img = ImageBuffer::make(w, h, channels);
    std::vector<float> row(static_cast<size_t>(w) * channels);
    // PFM stores rows bottom-to-top.
    for (int y = h - 1; y >= 0; --y) {
        if (std::fread(row.data(), sizeof(float), row.size(), fp.get()) != row.size())
            fail(ErrorCode::parse, "truncated PFM payload in '" + path + "'");
        std::memcpy(&img.data[static_cast<size_t>(y) * w * channels], row.data(),
                    row.size() * sizeof(float));
    }
    return img;
}

void write_pfm(const std::string& path, const ImageBuffer& img) {
    if (img.channels != 1 && img.channels != 3)
        fail(ErrorCode::invalid_arg, "write_pfm: channels must be 1 or 3");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    std::fprintf(fp.get(), "%s\n%d %d\n-1.0\n", img.channels == 3 ? "PF" : "Pf", img.width, img.height);
    for (int y = img.height - 1; y >= 0; --y) {
        const float* row = &img.data[static_cast<size_t>(y) * img.width * img.channels];
        if (std::fwrite(row, sizeof(float), static_cast<size_t>(img.width) * img.channels, fp.get()) !=
            static_cast<size_t>(img.width) * img.channels)
            fail(ErrorCode::io, "short write to '" + path + "'");
    }
}

std::vector<double> to_double(const ImageBuffer& img) {
    return std::vector<double>(img.data.begin(), img.data.end());
}

ImageBuffer from_double(const std::vector<double>& data, int width, int height, int channels) {
    ImageBuffer img = ImageBuffer::make(width, height, channels);
    for (size_t i = 0; i < data.size(); ++i) img.data[i] = static_cast<float>(data[i]);
    return img;
}

}  // namespace nsplat
