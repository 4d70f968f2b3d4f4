#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "synthba/corruption.hpp"
#include "synthba/gmm.hpp"
#include "synthba/random.hpp"
#include "synthba/rigid.hpp"
#include "synthba/volume.hpp"

namespace synthba {

enum class PriorMode { uniform, gaussian };

struct OutputConfig {
    double spacing_mm = 1.4;
    Dims dims{130, 130, 130};
};

/// Every randomized parameter of the generator.
struct GeneratorConfig {
    RigidSamplingConfig rigid;
    PriorMode prior_mode = PriorMode::uniform;
    UniformPrior uniform_prior;
    std::optional<std::filesystem::path> prior_file;
    /// Loaded from prior_file by load_generator_config(), or set directly.
    std::optional<GaussianPriorSet> priors;
    BiasFieldConfig bias;
    GammaConfig gamma;
    ResolutionConfig resolution;
    double background_zero_prob = 0.2;
    std::uint64_t master_seed = 0;
    OutputConfig output;

    void validate() const;
};

/// Parses a JSON config. Unknown keys are rejected. A relative prior_file
/// is resolved against `base_dir` and loaded.
GeneratorConfig generator_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
GeneratorConfig load_generator_config(const std::filesystem::path& path);
std::string generator_config_to_json(const GeneratorConfig& cfg);

// Substream labels, one per randomized stage.
inline constexpr std::string_view kStageRigid = "rigid";
inline constexpr std::string_view kStagePrior = "prior";
inline constexpr std::string_view kStageBackground = "background";
inline constexpr std::string_view kStageSynth = "synth";
inline constexpr std::string_view kStageBias = "bias";
inline constexpr std::string_view kStageGamma = "gamma";
inline constexpr std::string_view kStageResolution = "resolution";

struct SampleSeed {
    std::uint64_t master_seed = 0;
    std::string subject_id;
    std::uint64_t sample_index = 0;

    /// Pure function of the three fields.
    std::uint64_t derive() const;
    RandomStream stage_stream(std::string_view stage) const { return RandomStream(derive()).substream(stage); }
};

/// What one generate() call drew.
struct GenerationTrace {
    RigidTransform3D rigid;
    std::optional<std::size_t> sequence;
    bool background_zeroed = false;
    LabelParams params;
    double gamma = 1.0;
    Spacing resolution{};
};

struct Generated {
    IntensityVolume volume;
    GenerationTrace trace;
};

/// x ~ G(s): rigid warp, GMM synthesis, bias field, rescale + gamma,
/// resolution simulation. The output shares the grid of `s`.
Generated generate_traced(const LabelVolume& s, const GeneratorConfig& cfg, const SampleSeed& seed);
IntensityVolume generate(const LabelVolume& s, const GeneratorConfig& cfg, const SampleSeed& seed);

/// Resample to the output spacing, center crop/pad to the output dims, and
/// rescale to [0, 1].
IntensityVolume preprocess_for_training(const IntensityVolume& x, const GeneratorConfig& cfg);

} // namespace synthba
