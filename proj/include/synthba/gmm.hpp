#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthba/random.hpp"
#include "synthba/volume.hpp"

namespace synthba {

/// Option (a): mu ~ U[mu_a, mu_b], sigma ~ U[sigma_a, sigma_b] per label.
struct UniformPrior {
    double mu_a = 0.0;
    double mu_b = 1.0;
    double sigma_a = 0.0;
    double sigma_b = 0.25;

    void validate() const;
};

/// Hyper-parameters of one label under one sequence.
struct LabelPrior {
    double mu_mu = 0.0;
    double sigma_mu = 0.0;
    double mu_sigma = 0.0;
    double sigma_sigma = 0.0;

    bool operator==(const LabelPrior&) const = default;
};

struct SequencePrior {
    std::string name;
    std::map<Label, LabelPrior> labels;
};

/// Option (b): K sequence-specific prior sets.
struct GaussianPriorSet {
    std::vector<SequencePrior> sequences;

    /// Union of the labels of all sequences.
    std::vector<Label> labels() const;
    void validate() const;
};

struct GaussianParams {
    double mu = 0.0;
    double sigma = 0.0;
};

using LabelParams = std::map<Label, GaussianParams>;

LabelParams sample_params_uniform(const UniformPrior& prior, std::span<const Label> labels, RandomStream& rng);

struct GaussianDraw {
    LabelParams params;
    std::size_t sequence = 0; // zero-based
};

/// Draws from sequence `k`, or from a uniformly chosen sequence when `k` is
/// empty. Negative sigma draws are clamped to 0.
GaussianDraw sample_params_gaussian(const GaussianPriorSet& priors, std::optional<std::size_t> k, RandomStream& rng);

/// x_ijk ~ N(mu_l, sigma_l) for l = s_ijk, independently per voxel. Voxels
/// are drawn in fixed-size chunks, each from its own substream.
IntensityVolume synthesize(const LabelVolume& s, const LabelParams& params, RandomStream& rng);

struct ImageSegPair {
    IntensityVolume image;
    LabelVolume seg;
};

struct SequenceSamples {
    std::string name;
    std::vector<ImageSegPair> pairs;
};

/// Within-region mean and population std per image, then mean and sample std
/// across images. Labels seen in a single image get spreads of
/// kSingleSampleSpread. Images are used as given; callers rescale to [0,1].
GaussianPriorSet estimate_priors(std::span<const SequenceSamples> sequences);

inline constexpr double kSingleSampleSpread = 0.01;

std::string priors_to_json(const GaussianPriorSet& priors);
GaussianPriorSet priors_from_json(const std::string& text);
GaussianPriorSet load_priors(const std::filesystem::path& path);
void save_priors(const GaussianPriorSet& priors, const std::filesystem::path& path);

} // namespace synthba
