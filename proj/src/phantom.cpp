#include "synthba/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace synthba {

namespace {

struct Ellipsoid {
    Eigen::Vector3d center;
    Eigen::Vector3d radii;

    bool contains(const Eigen::Vector3d& p) const { return ((p - center).cwiseQuotient(radii)).squaredNorm() <= 1.0; }
};

void paint(std::vector<Label>& data, const GridMeta& meta, const Ellipsoid& e, Label value) {
    const Dims& d = meta.dims();
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor(e.center[a] - e.radii[a])));
        hi[a] = std::min(d[a] - 1, static_cast<int>(std::ceil(e.center[a] + e.radii[a])));
    }
    for (int k = lo[2]; k <= hi[2]; ++k) {
        for (int j = lo[1]; j <= hi[1]; ++j) {
            for (int i = lo[0]; i <= hi[0]; ++i) {
                if (e.contains(Eigen::Vector3d(i, j, k))) data[meta.index(i, j, k)] = value;
            }
        }
    }
}

} // namespace

void PhantomSpec::validate() const {
    for (const int d : dims) {
        if (d < 16) throw UsageError("phantom dims must be >= 16 per axis");
    }
    if (n_labels < 3) throw UsageError("phantom needs at least 3 labels");
    if (!(age_years >= kMinAge && age_years <= kMaxAge)) throw UsageError("phantom age must lie in [6, 95]");
    if (!(atrophy_coeff >= 0.0)) throw UsageError("atrophy_coeff must be >= 0");
}

Label tissue_label(int n_labels) { return n_labels >= 4 ? 2 : 1; }
Label ventricle_label(int n_labels) { return n_labels >= 4 ? 3 : 2; }

Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();
    const Dims& d = spec.dims;
    const Eigen::Vector3d center((d[0] - 1) / 2.0, (d[1] - 1) / 2.0, (d[2] - 1) / 2.0);
    const GridMeta meta(d, Spacing{1.0, 1.0, 1.0}, -center);
    const double min_dim = *std::min_element(d.begin(), d.end());
    RandomStream rng(spec.seed);

    std::vector<Label> data(meta.voxel_count(), 0);
    Eigen::Vector3d head;
    for (int a = 0; a < 3; ++a) head[a] = 0.44 * d[a] * rng.uniform(0.97, 1.03);
    const double skull = 0.07 * min_dim;
    const Ellipsoid inner{center, (head.array() - skull).matrix()};

    if (spec.n_labels >= 4) {
        paint(data, meta, Ellipsoid{center, head}, 1);
    }
    paint(data, meta, inner, tissue_label(spec.n_labels));

    // subregions sit halfway out from the center
    for (int s = 4; s < spec.n_labels; ++s) {
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double z = rng.uniform(-0.6, 0.6);
        const Eigen::Vector3d dir(std::sqrt(1.0 - z * z) * std::cos(theta), std::sqrt(1.0 - z * z) * std::sin(theta), z);
        const double radius = 0.07 * min_dim * rng.uniform(0.8, 1.2);
        const Eigen::Vector3d pos = center + 0.6 * inner.radii.cwiseProduct(dir);
        paint(data, meta, Ellipsoid{pos, Eigen::Vector3d::Constant(radius)}, static_cast<Label>(s));
    }

    const double jitter = rng.uniform(-0.25, 0.25);
    const double r_vent = 0.06 * min_dim + spec.atrophy_coeff * spec.age_years + jitter;
    paint(data, meta, Ellipsoid{center, Eigen::Vector3d(1.0, 1.4, 0.8) * r_vent}, ventricle_label(spec.n_labels));

    return Phantom{LabelVolume(meta, std::move(data)), spec.age_years};
}

double sample_age(AgeDistribution dist, RandomStream& rng) {
    if (dist == AgeDistribution::uniform) return rng.uniform(kMinAge, kMaxAge);
    for (;;) {
        const double peak = rng.bernoulli(0.5) ? 74.0 : 25.0;
        const double age = rng.normal(peak, 8.0);
        if (age >= kMinAge && age <= kMaxAge) return age;
    }
}

std::vector<CohortMember> make_cohort(int n, AgeDistribution dist, std::uint64_t seed, const PhantomSpec& base) {
    if (n < 1) throw UsageError("cohort size must be >= 1");
    RandomStream ages = RandomStream(seed).substream("ages");
    std::vector<CohortMember> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        PhantomSpec spec = base;
        spec.age_years = sample_age(dist, ages);
        spec.seed = RandomStream(seed).substream(static_cast<std::uint64_t>(i)).seed();
        char id[32];
        std::snprintf(id, sizeof(id), "phantom_%04d", i);
        out.push_back({id, make_phantom(spec)});
    }
    return out;
}

} // namespace synthba
