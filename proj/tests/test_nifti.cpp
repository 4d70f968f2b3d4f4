#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "synthba/nifti.hpp"
#include "test_support.hpp"

using namespace synthba;
using synthba::testing::TempDir;
using synthba::testing::make_image;
using synthba::testing::make_labels;
using synthba::testing::random_image;

namespace {

// Minimal hand-rolled NIfTI-1 writer, independent of the library encoder.
struct RawHeader {
    std::vector<unsigned char> bytes = std::vector<unsigned char>(352, 0);

    template <typename T>
    void put(std::size_t off, T v) { std::memcpy(bytes.data() + off, &v, sizeof(T)); }

    RawHeader(Dims d, std::int16_t datatype, std::int16_t bitpix) {
        put<std::int32_t>(0, 348);
        put<std::int16_t>(40, 3);
        for (int a = 0; a < 3; ++a) put<std::int16_t>(42 + 2 * a, static_cast<std::int16_t>(d[a]));
        put<std::int16_t>(70, datatype);
        put<std::int16_t>(72, bitpix);
        put<float>(76, 1.0f);
        for (int a = 0; a < 3; ++a) put<float>(80 + 4 * a, 1.0f);
        put<float>(108, 352.0f);
        std::memcpy(bytes.data() + 344, "n+1\0", 4);
    }
};

template <typename T>
void write_raw(const std::filesystem::path& p, RawHeader h, const std::vector<T>& values) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(h.bytes.data()), static_cast<std::streamsize>(h.bytes.size()));
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
}

} // namespace

TEST_CASE("intensity volumes round-trip through .nii and .nii.gz") {
    TempDir dir("nifti");
    const auto v = random_image({4, 4, 4}, 42, -2.0f, 9.0f);
    for (const char* name : {"a.nii", "a.nii.gz"}) {
        save_volume(v, dir / name);
        const auto back = load_intensity_volume(dir / name);
        CHECK(back == v);
        CHECK(back.meta().same_grid(v.meta(), 1e-6));
    }
}

TEST_CASE("label volumes round-trip and expose their label set") {
    TempDir dir("nifti");
    const auto s = make_labels({3, 3, 3}, {1.0, 1.0, 1.0}, [](int i, int, int) { return static_cast<Label>(i); });
    save_volume(s, dir / "s.nii.gz");
    const auto back = load_label_volume(dir / "s.nii.gz");
    CHECK(back == s);
    CHECK(back.label_set() == std::vector<Label>{0, 1, 2});
}

TEST_CASE("constant-zero volume round-trips exactly") {
    TempDir dir("nifti");
    const auto v = make_image({2, 2, 2}, {1.0, 1.0, 1.0}, [](int, int, int) { return 0.0f; });
    save_volume(v, dir / "z.nii");
    CHECK(load_intensity_volume(dir / "z.nii") == v);
}

TEST_CASE("anisotropic spacing and origin survive a round trip") {
    TempDir dir("nifti");
    const GridMeta meta({5, 6, 7}, Spacing{1.0, 1.0, 6.0}, Eigen::Vector3d(-10.5, 3.25, 40.0));
    const IntensityVolume v(meta, std::vector<float>(meta.voxel_count(), 0.25f));
    save_volume(v, dir / "an.nii.gz");
    const auto back = load_intensity_volume(dir / "an.nii.gz");
    for (int a = 0; a < 3; ++a) CHECK(std::abs(back.meta().spacing()[a] - meta.spacing()[a]) < 1e-5);
    CHECK((back.meta().affine() - meta.affine()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("a 130 cube round-trips with dims preserved") {
    TempDir dir("nifti");
    const auto v = make_image({130, 130, 130}, {1.4, 1.4, 1.4}, [](int i, int j, int k) { return static_cast<float>((i + j + k) % 7); });
    save_volume(v, dir / "big.nii.gz");
    const auto back = load_intensity_volume(dir / "big.nii.gz");
    CHECK(back.meta().dims() == Dims{130, 130, 130});
    // 1.4 is not exact in the float32 header
    CHECK(back.meta().same_grid(v.meta(), 1e-5));
    CHECK(std::equal(back.data().begin(), back.data().end(), v.data().begin()));
}

TEST_CASE("non-integer values cannot be loaded as labels") {
    TempDir dir("nifti");
    const auto v = make_image({2, 2, 2}, {1.0, 1.0, 1.0}, [](int i, int, int) { return i == 1 ? 1.5f : 0.0f; });
    save_volume(v, dir / "frac.nii");
    CHECK_THROWS_AS(load_label_volume(dir / "frac.nii"), DomainError);

    const auto neg = make_image({2, 2, 2}, {1.0, 1.0, 1.0}, [](int, int, int) { return -1.0f; });
    save_volume(neg, dir / "neg.nii");
    CHECK_THROWS_AS(load_label_volume(dir / "neg.nii"), DomainError);
}

TEST_CASE("write_nifti produces a stream load_volume can read") {
    TempDir dir("nifti");
    const auto v = random_image({3, 4, 5}, 8);
    std::ostringstream os;
    write_nifti(os, v);
    {
        std::ofstream f(dir / "s.nii", std::ios::binary);
        f << os.str();
    }
    CHECK(load_intensity_volume(dir / "s.nii") == v);
}

TEST_CASE("hand-written headers decode") {
    TempDir dir("nifti");

    SUBCASE("int16 with slope and intercept, pixdim only") {
        RawHeader h({2, 2, 1}, 4, 16);
        h.put<float>(80, 2.0f);
        h.put<float>(84, 3.0f);
        h.put<float>(112, 0.5f);
        h.put<float>(116, 10.0f);
        write_raw<std::int16_t>(dir / "a.nii", h, {0, 2, 4, -6});
        const auto v = load_intensity_volume(dir / "a.nii");
        CHECK(v.meta().spacing()[0] == doctest::Approx(2.0));
        CHECK(v.meta().spacing()[1] == doctest::Approx(3.0));
        CHECK(std::vector<float>(v.data().begin(), v.data().end()) == std::vector<float>{10.0f, 11.0f, 12.0f, 7.0f});
    }

    SUBCASE("float64 data") {
        RawHeader h({2, 1, 1}, 64, 64);
        write_raw<double>(dir / "b.nii", h, {0.125, 3.5});
        const auto v = load_intensity_volume(dir / "b.nii");
        CHECK(v[0] == 0.125f);
        CHECK(v[1] == 3.5f);
    }

    SUBCASE("sform wins over pixdim") {
        RawHeader h({2, 1, 1}, 2, 8);
        h.put<std::int16_t>(254, 1);
        const float srow[3][4] = {{0.0f, 0.0f, 2.5f, 1.0f}, {0.0f, 1.5f, 0.0f, 2.0f}, {4.0f, 0.0f, 0.0f, 3.0f}};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) h.put<float>(280 + 16 * r + 4 * c, srow[r][c]);
        write_raw<std::uint8_t>(dir / "c.nii", h, {1, 2});
        const auto v = load_label_volume(dir / "c.nii");
        CHECK(v.meta().spacing()[0] == doctest::Approx(4.0));
        CHECK(v.meta().spacing()[2] == doctest::Approx(2.5));
        CHECK(v.meta().affine()(0, 3) == doctest::Approx(1.0));
    }

    SUBCASE("byte-swapped header") {
        RawHeader h({2, 1, 1}, 4, 16);
        auto swap_at = [&](std::size_t off, std::size_t n) { std::reverse(h.bytes.begin() + off, h.bytes.begin() + off + n); };
        swap_at(0, 4);
        for (int a = 0; a < 4; ++a) swap_at(40 + 2 * a, 2);
        swap_at(70, 2);
        swap_at(72, 2);
        for (int a = 0; a < 4; ++a) swap_at(76 + 4 * a, 4);
        swap_at(108, 4);
        std::vector<std::int16_t> data{0x0100, 0x0200}; // big-endian 1 and 2
        write_raw(dir / "d.nii", h, data);
        const auto v = load_label_volume(dir / "d.nii");
        CHECK(v[0] == 1);
        CHECK(v[1] == 2);
    }

    SUBCASE("unsupported datatype") {
        RawHeader h({2, 1, 1}, 32, 64); // complex64
        write_raw<float>(dir / "e.nii", h, {0, 0, 0, 0});
        CHECK_THROWS_AS(load_intensity_volume(dir / "e.nii"), UnsupportedError);
    }

    SUBCASE("bitpix mismatch and truncated data") {
        RawHeader h({2, 1, 1}, 16, 8);
        write_raw<float>(dir / "f.nii", h, {0, 0});
        CHECK_THROWS_AS(load_intensity_volume(dir / "f.nii"), FormatError);

        RawHeader t({4, 4, 4}, 16, 32);
        write_raw<float>(dir / "g.nii", t, {0, 0});
        CHECK_THROWS_AS(load_intensity_volume(dir / "g.nii"), FormatError);
    }
}

TEST_CASE("malformed and missing files") {
    TempDir dir("nifti");
    {
        std::ofstream f(dir / "junk.nii", std::ios::binary);
        f << std::string(400, 'x');
    }
    CHECK_THROWS_AS(load_intensity_volume(dir / "junk.nii"), FormatError);
    CHECK_THROWS_AS(load_intensity_volume(dir / "absent.nii"), IoError);
    const auto v = random_image({2, 2, 2}, 1);
    CHECK_THROWS_AS(save_volume(v, dir / "no" / "such" / "dir.nii"), IoError);
}

TEST_CASE("path helpers") {
    CHECK(is_nifti_path("a/b.nii"));
    CHECK(is_nifti_path("b.nii.gz"));
    CHECK_FALSE(is_nifti_path("b.gz"));
    CHECK_FALSE(is_nifti_path("b.csv"));
    CHECK(nifti_stem("x/sub-01_seg.nii.gz") == "sub-01_seg");
    CHECK(nifti_stem("y.nii") == "y");
}
