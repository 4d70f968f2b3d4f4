#pragma once

#include <array>
#include <vector>

#include "synthba/random.hpp"
#include "synthba/volume.hpp"

namespace synthba {

struct BiasFieldConfig {
    Dims control_grid{4, 4, 4};
    double amplitude = 0.3; // std of the log-field control values
    bool enabled = true;

    void validate() const;
};

struct GammaConfig {
    double log_gamma_std = 0.3;
    bool enabled = true;

    void validate() const;
};

struct ResolutionConfig {
    std::array<double, 2> iso_spacing_range_mm{1.0, 3.0};
    std::array<double, 2> aniso_axis_spacing_range_mm{1.0, 6.0};
    double p_anisotropic = 0.5;
    bool enabled = true;

    void validate() const;
};

/// Log-field values on the coarse control lattice, x fastest.
struct BiasControlGrid {
    Dims dims{};
    std::vector<double> log_values;
};

BiasControlGrid sample_bias_control(const BiasFieldConfig& cfg, RandomStream& rng);

/// exp of the trilinear interpolation of the control lattice. Control
/// points sit at voxel coordinates c * (n - 1) / (g - 1) along each axis.
IntensityVolume expand_bias_field(const BiasControlGrid& control, const GridMeta& grid);

/// Positive multiplicative field on `grid`; all ones when disabled or when
/// the amplitude is zero.
IntensityVolume sample_bias_field(const GridMeta& grid, const BiasFieldConfig& cfg, RandomStream& rng);

IntensityVolume apply_bias(const IntensityVolume& x, const IntensityVolume& field);

/// gamma = exp(eps), eps ~ N(0, log_gamma_std); 1 when disabled.
double sample_gamma(const GammaConfig& cfg, RandomStream& rng);

/// Voxelwise x^gamma for x in [0, 1].
IntensityVolume gamma_transform(const IntensityVolume& x, double gamma);

/// With probability p_anisotropic one random axis takes a thick spacing and
/// the others keep `native`; otherwise all axes share one isotropic spacing.
/// Returns `native` when disabled.
Spacing sample_resolution(const ResolutionConfig& cfg, const Spacing& native, RandomStream& rng);

/// Blur width (voxels) applied along an axis downsampled by `ratio`.
inline double partial_volume_sigma(double ratio) { return 0.42 * ratio; }

/// Blurs each coarsened axis, resamples to `target`, and resamples back to
/// the input grid. Axes at native spacing are left alone.
IntensityVolume simulate_resolution(const IntensityVolume& x, const Spacing& target);

} // namespace synthba
