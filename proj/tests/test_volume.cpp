#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"

#include "synthba/volume.hpp"
#include "test_support.hpp"

using namespace synthba;
using synthba::testing::make_image;
using synthba::testing::make_labels;
using synthba::testing::random_image;

namespace {

// Enumerates every low-side offset a centered crop could use and keeps the
// one that removes floor(excess/2) below and the remainder above.
int crop_offset_oracle(int n, int m) {
    for (int lo = 0; lo <= n - m; ++lo) {
        const int hi = (n - m) - lo;
        if (hi == lo || hi == lo + 1) return lo;
    }
    return -1;
}

} // namespace

TEST_CASE("GridMeta rejects invalid geometry") {
    CHECK_THROWS_AS(GridMeta({0, 4, 4}, Spacing{1.0, 1.0, 1.0}), UsageError);
    CHECK_THROWS_AS(GridMeta({4, 4, 4}, Spacing{1.0, -1.0, 1.0}), UsageError);
    Affine singular = Affine::Identity();
    singular(2, 2) = 0.0;
    CHECK_THROWS_AS(GridMeta({4, 4, 4}, singular), UsageError);

    Affine oblique = Affine::Identity();
    oblique.block<3, 1>(0, 0) = Eigen::Vector3d(0.0, 2.0, 0.0);
    oblique.block<3, 1>(0, 1) = Eigen::Vector3d(-1.5, 0.0, 0.0);
    const GridMeta g({4, 4, 4}, oblique);
    CHECK(g.spacing()[0] == doctest::Approx(2.0));
    CHECK(g.spacing()[1] == doctest::Approx(1.5));
}

TEST_CASE("volume types enforce their invariants") {
    const GridMeta meta({2, 2, 2}, Spacing{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(IntensityVolume(meta, std::vector<float>(7)), UsageError);
    std::vector<float> bad(8, 0.0f);
    bad[3] = std::nanf("");
    CHECK_THROWS_AS(IntensityVolume(meta, bad), DomainError);

    const LabelVolume lv(meta, {3, 0, 3, 7, 0, 0, 7, 3});
    CHECK(lv.label_set() == std::vector<Label>{0, 3, 7});

    // iterating the set of a temporary is safe
    std::vector<Label> seen;
    for (const Label l : LabelVolume(meta, {3, 0, 3, 7, 0, 0, 7, 3}).label_set()) seen.push_back(l);
    CHECK(seen == std::vector<Label>{0, 3, 7});
}

TEST_CASE("crop_or_pad pads a constant block into the center") {
    const auto v = make_image({2, 2, 2}, {1.0, 1.0, 1.0}, [](int, int, int) { return 5.0f; });
    const auto out = crop_or_pad(v, {4, 4, 4}, 0.0f);
    CHECK(out.meta().dims() == Dims{4, 4, 4});
    int fives = 0, zeros = 0;
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) {
                const bool inner = i >= 1 && i <= 2 && j >= 1 && j <= 2 && k >= 1 && k <= 2;
                const float x = out.at(i, j, k);
                CHECK(x == (inner ? 5.0f : 0.0f));
                (x == 5.0f ? fives : zeros)++;
            }
    CHECK(fives == 8);
    CHECK(zeros == 56);
}

TEST_CASE("crop_or_pad at the current size is the identity") {
    const auto v = random_image({5, 6, 7}, 11);
    CHECK(crop_or_pad(v, v.meta().dims(), 0.0f) == v);
}

TEST_CASE("crop_or_pad moves a marker according to the centered offset") {
    const auto v = make_image({5, 5, 5}, {1.0, 1.0, 1.0}, [](int i, int j, int k) { return i == 2 && j == 2 && k == 2 ? 1.0f : 0.0f; });
    const auto out = crop_or_pad(v, {3, 3, 3}, 0.0f);
    const int o = crop_offset_oracle(5, 3);
    REQUIRE(o == 1);
    CHECK(out.at(2 - o, 2 - o, 2 - o) == 1.0f);
    float total = 0.0f;
    for (const float x : out.data()) total += x;
    CHECK(total == 1.0f);

    SUBCASE("odd excess goes to the high side") {
        for (int n = 3; n <= 12; ++n) {
            for (int m = 1; m <= n; ++m) {
                const auto line = make_image({n, 1, 1}, {1.0, 1.0, 1.0}, [](int i, int, int) { return static_cast<float>(i); });
                const auto cropped = crop_or_pad(line, {m, 1, 1}, -1.0f);
                CHECK(cropped.at(0, 0, 0) == static_cast<float>(crop_offset_oracle(n, m)));
            }
        }
    }
}

TEST_CASE("crop_or_pad keeps voxels at the same world position") {
    const auto v = random_image({9, 6, 5}, 3);
    const auto out = crop_or_pad(v, {6, 10, 5}, 0.0f);
    for (int k = 0; k < 5; ++k)
        for (int j = 0; j < 10; ++j)
            for (int i = 0; i < 6; ++i) {
                const Eigen::Vector3d src = v.meta().world_to_voxel(out.meta().voxel_to_world(Eigen::Vector3d(i, j, k)));
                const int si = static_cast<int>(std::lround(src.x())), sj = static_cast<int>(std::lround(src.y())),
                          sk = static_cast<int>(std::lround(src.z()));
                const bool inside = si >= 0 && si < 9 && sj >= 0 && sj < 6 && sk >= 0 && sk < 5;
                CHECK(out.at(i, j, k) == (inside ? v.at(si, sj, sk) : 0.0f));
            }
}

TEST_CASE("crop_or_pad is idempotent at the target size") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> dim(1, 12);
    for (int t = 0; t < 50; ++t) {
        const auto v = random_image({dim(rng), dim(rng), dim(rng)}, t);
        const Dims target{dim(rng), dim(rng), dim(rng)};
        const auto once = crop_or_pad(v, target, 0.5f);
        CHECK(crop_or_pad(once, target, 0.5f) == once);
    }
}

TEST_CASE("crop_or_pad on labels pads with background") {
    const auto s = make_labels({2, 2, 2}, {1.0, 1.0, 1.0}, [](int, int, int) { return Label{4}; });
    const auto out = crop_or_pad(s, {4, 4, 4});
    CHECK(out.label_set() == std::vector<Label>{0, 4});
}

TEST_CASE("rescale_01") {
    const GridMeta meta({3, 1, 1}, Spacing{1.0, 1.0, 1.0});
    const auto out = rescale_01(IntensityVolume(meta, {2.0f, 4.0f, 6.0f}));
    CHECK(out[0] == 0.0f);
    CHECK(out[1] == 0.5f);
    CHECK(out[2] == 1.0f);

    const auto constant = rescale_01(IntensityVolume(meta, {3.0f, 3.0f, 3.0f}));
    for (const float x : constant.data()) CHECK(x == 0.0f);

    const IntensityVolume unit(meta, {0.0f, 0.37f, 1.0f});
    CHECK(rescale_01(unit) == unit);
}

TEST_CASE("rescale_01 preserves voxel order") {
    const auto v = random_image({20, 20, 20}, 9, -3.0f, 7.0f);
    const auto out = rescale_01(v);
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    for (std::size_t n = 1; n < idx.size(); ++n) CHECK(out[idx[n - 1]] <= out[idx[n]]);
    CHECK(*std::min_element(out.data().begin(), out.data().end()) == 0.0f);
    CHECK(*std::max_element(out.data().begin(), out.data().end()) == 1.0f);
}

TEST_CASE("resample output dims follow round(dims * spacing / target)") {
    const auto v = make_image({130, 130, 130}, {1.0, 1.0, 1.0}, [](int, int, int) { return 2.5f; });
    const auto out = resample(v, {1.4, 1.4, 1.4});
    const int expected = static_cast<int>(std::lround(130 * 1.0 / 1.4));
    CHECK(expected == 93);
    CHECK(out.meta().dims() == Dims{93, 93, 93});
    for (int a = 0; a < 3; ++a) CHECK(out.meta().spacing()[a] == doctest::Approx(1.4));
    for (const float x : out.data()) CHECK(x == doctest::Approx(2.5f).epsilon(1e-6));

    const auto tiny = resample(make_image({2, 2, 2}, {1.0, 1.0, 1.0}, [](int, int, int) { return 1.0f; }), {10.0, 10.0, 10.0});
    CHECK(tiny.meta().dims() == Dims{1, 1, 1});
}

TEST_CASE("resample keeps the grid origin") {
    const auto v = random_image({10, 12, 14}, 1);
    const auto out = resample(v, {2.0, 1.5, 0.7});
    const Eigen::Vector3d a = v.meta().voxel_to_world(Eigen::Vector3d::Zero());
    const Eigen::Vector3d b = out.meta().voxel_to_world(Eigen::Vector3d::Zero());
    CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("identity resample leaves data unchanged") {
    const auto v = random_image({8, 9, 10}, 4);
    const auto tri = resample(v, v.meta().spacing(), Interpolation::trilinear);
    const auto nn = resample(v, v.meta().spacing(), Interpolation::nearest);
    for (std::size_t n = 0; n < v.size(); ++n) {
        CHECK(std::abs(tri[n] - v[n]) <= 1e-6);
        CHECK(nn[n] == v[n]);
    }
}

TEST_CASE("labels cannot be resampled trilinearly") {
    const auto s = make_labels({4, 4, 4}, {1.0, 1.0, 1.0}, [](int i, int, int) { return static_cast<Label>(i); });
    CHECK_THROWS_AS(resample(s, {2.0, 2.0, 2.0}, Interpolation::trilinear), UsageError);
}

TEST_CASE("nearest resampling never introduces labels") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> sp(0.4, 3.0);
    for (int t = 0; t < 20; ++t) {
        const auto s = make_labels({17, 13, 11}, {1.0, 1.2, 0.9}, [&](int i, int j, int k) {
            return static_cast<Label>(((i / 3) * 7 + (j / 4) * 3 + k) % 5 + 2);
        });
        const auto out = resample(s, {sp(rng), sp(rng), sp(rng)});
        std::set<Label> allowed(s.label_set().begin(), s.label_set().end());
        allowed.insert(0);
        for (const Label l : out.label_set()) CHECK(allowed.contains(l));
    }
}

TEST_CASE("trilinear resampling preserves the interior of a constant region") {
    // constant 7 inside a box, zero outside
    const auto v = make_image({60, 60, 60}, {1.0, 1.0, 1.0}, [](int i, int j, int k) {
        return (i >= 10 && i < 50 && j >= 10 && j < 50 && k >= 10 && k < 50) ? 7.0f : 0.0f;
    });
    const auto out = resample(v, {1.4, 1.4, 1.4});
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < out.meta().dims()[2]; ++k)
        for (int j = 0; j < out.meta().dims()[1]; ++j)
            for (int i = 0; i < out.meta().dims()[0]; ++i) {
                const Eigen::Vector3d w = out.meta().voxel_to_world(Eigen::Vector3d(i, j, k));
                if ((w.array() >= 12.0).all() && (w.array() <= 47.0).all()) {
                    sum += out.at(i, j, k);
                    ++count;
                }
            }
    REQUIRE(count > 1000);
    CHECK(std::abs(sum / count - 7.0) < 1e-3);
}
