#include "synthba/corruption.hpp"

#include <algorithm>
#include <cmath>

namespace synthba {

namespace {

struct AxisWeights {
    std::vector<int> lo;
    std::vector<int> hi;
    std::vector<double> w;
};

AxisWeights control_weights(int n, int g) {
    AxisWeights a;
    a.lo.resize(n);
    a.hi.resize(n);
    a.w.resize(n);
    for (int i = 0; i < n; ++i) {
        const double c = n > 1 ? static_cast<double>(i) * (g - 1) / (n - 1) : 0.0;
        int lo = static_cast<int>(std::floor(c));
        lo = std::clamp(lo, 0, g - 1);
        const int hi = std::min(lo + 1, g - 1);
        a.lo[i] = lo;
        a.hi[i] = hi;
        a.w[i] = hi == lo ? 0.0 : c - lo;
    }
    return a;
}

std::size_t stride_of(const Dims& d, int axis) {
    return axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(d[0]) : static_cast<std::size_t>(d[0]) * d[1];
}

// Normalized Gaussian convolution along one axis with edge replication.
std::vector<float> blur_axis(const std::vector<float>& in, const Dims& d, int axis, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
        total += kernel[t + radius];
    }
    for (double& k : kernel) k /= total;

    const int n = d[axis];
    const std::size_t stride = stride_of(d, axis);
    const int ax_b = axis == 0 ? 1 : 0;
    const int ax_c = axis == 2 ? 1 : 2;
    std::vector<float> out(in.size());
    std::vector<double> line(n);
    for (int c = 0; c < d[ax_c]; ++c) {
        for (int b = 0; b < d[ax_b]; ++b) {
            std::array<std::size_t, 3> idx{};
            idx[ax_b] = b;
            idx[ax_c] = c;
            const std::size_t base = idx[0] + d[0] * (idx[1] + static_cast<std::size_t>(d[1]) * idx[2]);
            for (int i = 0; i < n; ++i) line[i] = in[base + i * stride];
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    acc += kernel[t + radius] * line[std::clamp(i + t, 0, n - 1)];
                }
                out[base + i * stride] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

void check_range(const std::array<double, 2>& r, const char* what) {
    if (!(r[0] > 0.0 && r[0] <= r[1])) throw ConfigError(std::string(what) + " must satisfy 0 < lo <= hi");
}

} // namespace

void BiasFieldConfig::validate() const {
    for (const int g : control_grid) {
        if (g < 2 || g > 8) throw ConfigError("bias control grid must be in [2, 8] per axis");
    }
    if (!(amplitude >= 0.0)) throw ConfigError("bias amplitude must be >= 0");
}

void GammaConfig::validate() const {
    if (!(log_gamma_std >= 0.0)) throw ConfigError("log_gamma_std must be >= 0");
}

void ResolutionConfig::validate() const {
    check_range(iso_spacing_range_mm, "iso_spacing_range_mm");
    check_range(aniso_axis_spacing_range_mm, "aniso_axis_spacing_range_mm");
    if (!(p_anisotropic >= 0.0 && p_anisotropic <= 1.0)) throw ConfigError("p_anisotropic must be in [0, 1]");
}

BiasControlGrid sample_bias_control(const BiasFieldConfig& cfg, RandomStream& rng) {
    cfg.validate();
    BiasControlGrid g;
    g.dims = cfg.control_grid;
    g.log_values.resize(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2]);
    for (double& v : g.log_values) v = rng.normal(0.0, cfg.amplitude);
    return g;
}

IntensityVolume expand_bias_field(const BiasControlGrid& control, const GridMeta& grid) {
    const Dims& d = grid.dims();
    const Dims& g = control.dims;
    const AxisWeights wx = control_weights(d[0], g[0]);
    const AxisWeights wy = control_weights(d[1], g[1]);
    const AxisWeights wz = control_weights(d[2], g[2]);
    auto cv = [&](int i, int j, int k) { return control.log_values[i + static_cast<std::size_t>(g[0]) * (j + static_cast<std::size_t>(g[1]) * k)]; };

    std::vector<float> out(grid.voxel_count());
    std::size_t n = 0;
    for (int k = 0; k < d[2]; ++k) {
        const double fz = wz.w[k];
        for (int j = 0; j < d[1]; ++j) {
            const double fy = wy.w[j];
            for (int i = 0; i < d[0]; ++i, ++n) {
                const double fx = wx.w[i];
                auto plane = [&](int kk) {
                    const double a = cv(wx.lo[i], wy.lo[j], kk) + fx * (cv(wx.hi[i], wy.lo[j], kk) - cv(wx.lo[i], wy.lo[j], kk));
                    const double b = cv(wx.lo[i], wy.hi[j], kk) + fx * (cv(wx.hi[i], wy.hi[j], kk) - cv(wx.lo[i], wy.hi[j], kk));
                    return a + fy * (b - a);
                };
                const double lo = plane(wz.lo[k]);
                const double hi = plane(wz.hi[k]);
                out[n] = static_cast<float>(std::exp(lo + fz * (hi - lo)));
            }
        }
    }
    return IntensityVolume(grid, std::move(out));
}

IntensityVolume sample_bias_field(const GridMeta& grid, const BiasFieldConfig& cfg, RandomStream& rng) {
    cfg.validate();
    if (!cfg.enabled || cfg.amplitude == 0.0) {
        return IntensityVolume(grid, std::vector<float>(grid.voxel_count(), 1.0f));
    }
    return expand_bias_field(sample_bias_control(cfg, rng), grid);
}

IntensityVolume apply_bias(const IntensityVolume& x, const IntensityVolume& field) {
    if (!x.meta().same_grid(field.meta(), 1e-6)) throw UsageError("bias field grid does not match the image grid");
    std::vector<float> out(x.size());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = x[n] * field[n];
    return IntensityVolume(x.meta(), std::move(out));
}

double sample_gamma(const GammaConfig& cfg, RandomStream& rng) {
    cfg.validate();
    if (!cfg.enabled) return 1.0;
    return std::exp(rng.normal(0.0, cfg.log_gamma_std));
}

IntensityVolume gamma_transform(const IntensityVolume& x, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be a positive finite number");
    constexpr double tol = 1e-6;
    std::vector<float> out(x.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double v = x[n];
        if (v < -tol || v > 1.0 + tol) throw UsageError("gamma_transform input must lie in [0, 1]");
        out[n] = gamma == 1.0 ? x[n] : static_cast<float>(std::pow(std::clamp(v, 0.0, 1.0), gamma));
    }
    return IntensityVolume(x.meta(), std::move(out));
}

Spacing sample_resolution(const ResolutionConfig& cfg, const Spacing& native, RandomStream& rng) {
    if (!cfg.enabled) return native;
    cfg.validate();
    Spacing out = native;
    if (rng.bernoulli(cfg.p_anisotropic)) {
        const std::size_t axis = rng.index(3);
        out[axis] = rng.uniform(cfg.aniso_axis_spacing_range_mm[0], cfg.aniso_axis_spacing_range_mm[1]);
    } else {
        const double s = rng.uniform(cfg.iso_spacing_range_mm[0], cfg.iso_spacing_range_mm[1]);
        out = {s, s, s};
    }
    return out;
}

IntensityVolume simulate_resolution(const IntensityVolume& x, const Spacing& target) {
    const GridMeta& meta = x.meta();
    const Spacing& native = meta.spacing();
    Dims low_dims = meta.dims();
    Spacing low_spacing = native;
    bool any = false;
    std::vector<float> data(x.data().begin(), x.data().end());
    for (int a = 0; a < 3; ++a) {
        if (!(target[a] > 0.0)) throw UsageError("target spacing must be > 0");
        const double ratio = target[a] / native[a];
        if (ratio < 1.0 - 1e-9) throw UsageError("simulate_resolution only lowers resolution");
        if (ratio <= 1.0 + 1e-9) continue;
        any = true;
        data = blur_axis(data, meta.dims(), a, partial_volume_sigma(ratio));
        low_dims[a] = std::max(1, static_cast<int>(std::lround(meta.dims()[a] / ratio)));
        low_spacing[a] = target[a];
    }
    if (!any) return x;
    const IntensityVolume blurred(meta, std::move(data));
    const IntensityVolume low = resample_onto(blurred, low_dims, low_spacing);
    const IntensityVolume back = resample_onto(low, meta.dims(), native);
    return IntensityVolume(meta, std::vector<float>(back.data().begin(), back.data().end()));
}

} // namespace synthba
