#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synthba/random.hpp"
#include "synthba/volume.hpp"

namespace synthba {

inline constexpr double kMinAge = 6.0;
inline constexpr double kMaxAge = 95.0;

struct PhantomSpec {
    Dims dims{64, 64, 64};
    int n_labels = 8;
    double age_years = 50.0;
    std::uint64_t seed = 0;
    double atrophy_coeff = 0.05; // ventricle radius growth, voxels per year

    void validate() const;
};

/// Label ids: 0 background, then skull (when n_labels >= 4), tissue,
/// ventricle, and n_labels - 4 small subregions.
Label tissue_label(int n_labels);
Label ventricle_label(int n_labels);

struct Phantom {
    LabelVolume labels;
    double age = 0.0;
};

/// Nested ellipsoids on a 1 mm grid centered on the world origin. The
/// ventricle radius grows linearly with age; the rest of the geometry
/// depends on the seed only.
Phantom make_phantom(const PhantomSpec& spec);

enum class AgeDistribution { uniform, bimodal };

/// Uniform on [6, 95], or an equal mixture of N(25, 8) and N(74, 8)
/// truncated to [6, 95].
double sample_age(AgeDistribution dist, RandomStream& rng);

struct CohortMember {
    std::string subject_id;
    Phantom phantom;
};

/// `base` supplies dims, n_labels and atrophy_coeff; age and seed are drawn
/// per member.
std::vector<CohortMember> make_cohort(int n, AgeDistribution dist, std::uint64_t seed, const PhantomSpec& base = {});

} // namespace synthba
