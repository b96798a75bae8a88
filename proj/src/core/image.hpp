#pragma once

#include <string>
#include <vector>

namespace nsplat {

// Row-major float image, values in [0,1] for LDR content.
struct ImageBuffer {
    int width = 0, height = 0, channels = 0;  // channels: 1 or 3
    std::vector<float> data;

    static ImageBuffer make(int w, int h, int c) {
        ImageBuffer b;
        b.width = w;
        b.height = h;
        b.channels = c;
        b.data.assign(static_cast<size_t>(w) * h * c, 0.0f);
        return b;
    }
    float& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
};

// 8-bit PNG; RGBA inputs are flattened to RGB, gray stays single channel.
ImageBuffer read_png(const std::string& path);
void write_png(const std::string& path, const ImageBuffer& img);

// Portable Float Map, little-endian only (negative scale field).
ImageBuffer read_pfm(const std::string& path);
void write_pfm(const std::string& path, const ImageBuffer& img);

std::vector<double> to_double(const ImageBuffer& img);
ImageBuffer from_double(const std::vector<double>& data, int width, int height, int channels);

}  // namespace nsplat
