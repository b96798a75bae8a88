#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "core/image.hpp"
#include "core/math.hpp"

using namespace nsplat;
namespace fs = std::filesystem;

namespace {
fs::path tmp(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "nsplat_test_io";
    fs::create_directories(dir);
    return dir / name;
}
}  // namespace

TEST_CASE("png round trip") {
    ImageBuffer img = ImageBuffer::make(9, 7, 3);
    Rng rng(71);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(0.0, 1.0));

    fs::path p = tmp("roundtrip.png");
    write_png(p.string(), img);
    ImageBuffer back = read_png(p.string());
    REQUIRE(back.width == 9);
    REQUIRE(back.height == 7);
    REQUIRE(back.channels == 3);
    for (size_t i = 0; i < img.data.size(); ++i) {
        float quantized = std::lround(img.data[i] * 255.0f) / 255.0f;
        CHECK(back.data[i] == doctest::Approx(quantized).epsilon(1e-7));
    }

    // Re-encoding a decoded PNG is byte-identical.
    fs::path p2 = tmp("roundtrip2.png");
    write_png(p2.string(), back);
    auto slurp = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(p) == slurp(p2));

    // All-zero image.
    ImageBuffer zero = ImageBuffer::make(5, 5, 3);
    fs::path pz = tmp("zero.png");
    write_png(pz.string(), zero);
    ImageBuffer zback = read_png(pz.string());
    for (float v : zback.data) CHECK(v == 0.0f);

    // Single-pixel arithmetic: byte 128 -> 128/255.
    ImageBuffer one = ImageBuffer::make(1, 1, 3);
    one.data = {128.0f / 255.0f, 128.0f / 255.0f, 128.0f / 255.0f};
    fs::path po = tmp("one.png");
    write_png(po.string(), one);
    ImageBuffer oback = read_png(po.string());
    CHECK(oback.data[0] == doctest::Approx(0.50196).epsilon(1e-5));
}

TEST_CASE("png decode errors") {
    fs::path bad = tmp("truncated.png");
    {
        ImageBuffer img = ImageBuffer::make(16, 16, 3);
        write_png(bad.string(), img);
        auto size = fs::file_size(bad);
        fs::resize_file(bad, size / 2);
    }
    CHECK_THROWS_AS(read_png(bad.string()), Error);

    fs::path notpng = tmp("not.png");
    {
        std::ofstream out(notpng);
        out << "definitely not a png";
    }
    try {
        read_png(notpng.string());
        FAIL("expected decode error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
    }
    CHECK_THROWS_AS(read_png(tmp("missing.png").string()), Error);
}

TEST_CASE("pfm round trip and validation") {
    ImageBuffer img = ImageBuffer::make(6, 4, 3);
    Rng rng(72);
    for (auto& v : img.data) v = static_cast<float>(rng.normal() * 10.0);

    fs::path p = tmp("data.pfm");
    write_pfm(p.string(), img);
    ImageBuffer back = read_pfm(p.string());
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    REQUIRE(back.channels == 3);
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);

    // Single channel.
    ImageBuffer gray = ImageBuffer::make(5, 3, 1);
    for (auto& v : gray.data) v = static_cast<float>(rng.normal());
    fs::path pg = tmp("gray.pfm");
    write_pfm(pg.string(), gray);
    ImageBuffer gback = read_pfm(pg.string());
    REQUIRE(gback.channels == 1);
    for (size_t i = 0; i < gray.data.size(); ++i) CHECK(gback.data[i] == gray.data[i]);

    // Big-endian scale is rejected.
    fs::path pb = tmp("bigendian.pfm");
    {
        std::ofstream out(pb, std::ios::binary);
        out << "PF\n2 2\n1.0\n";
        float zeros[12] = {};
        out.write(reinterpret_cast<char*>(zeros), sizeof(zeros));
    }
    try {
        read_pfm(pb.string());
        FAIL("expected header error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
    }

    // Unit normal rows survive the trip.
    ImageBuffer normals = ImageBuffer::make(4, 4, 3);
    for (int i = 0; i < 16; ++i) {
        normals.data[i * 3 + 0] = 0.0f;
        normals.data[i * 3 + 1] = 0.0f;
        normals.data[i * 3 + 2] = -1.0f;
    }
    fs::path pn = tmp("normals.pfm");
    write_pfm(pn.string(), normals);
    ImageBuffer nb = read_pfm(pn.string());
    for (int i = 0; i < 16; ++i) {
        double n = std::sqrt(nb.data[i * 3] * nb.data[i * 3] + nb.data[i * 3 + 1] * nb.data[i * 3 + 1] +
                             nb.data[i * 3 + 2] * nb.data[i * 3 + 2]);
        CHECK(n == doctest::Approx(1.0).epsilon(1e-6));
    }
}
