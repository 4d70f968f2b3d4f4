#include "synthba/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synthba {

GridMeta::GridMeta(Dims dims, Spacing spacing, const Eigen::Vector3d& origin)
    : dims_(dims), spacing_(spacing), affine_(Affine::Identity()) {
    for (int a = 0; a < 3; ++a) affine_(a, a) = spacing[a];
    affine_.block<3, 1>(0, 3) = origin;
    validate();
}

GridMeta::GridMeta(Dims dims, const Affine& affine) : dims_(dims), spacing_{}, affine_(affine) {
    for (int a = 0; a < 3; ++a) spacing_[a] = affine.block<3, 1>(0, a).norm();
    validate();
}

void GridMeta::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims_[a] < 1) throw UsageError("grid dims must be >= 1");
        if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) throw UsageError("grid spacing must be > 0");
    }
    if (!affine_.allFinite()) throw UsageError("grid affine is not finite");
    if (!(std::abs(affine_.block<3, 3>(0, 0).determinant()) > 0.0)) throw UsageError("grid affine is singular");
}

Eigen::Vector3d GridMeta::voxel_to_world(const Eigen::Vector3d& ijk) const {
    return affine_.block<3, 3>(0, 0) * ijk + affine_.block<3, 1>(0, 3);
}

Eigen::Vector3d GridMeta::world_to_voxel(const Eigen::Vector3d& xyz) const {
    return affine_.block<3, 3>(0, 0).inverse() * (xyz - affine_.block<3, 1>(0, 3));
}

Eigen::Vector3d GridMeta::center_world() const {
    const Eigen::Vector3d mid((dims_[0] - 1) / 2.0, (dims_[1] - 1) / 2.0, (dims_[2] - 1) / 2.0);
    return voxel_to_world(mid);
}

bool GridMeta::same_grid(const GridMeta& other, double tol) const {
    if (dims_ != other.dims_) return false;
    return (affine_ - other.affine_).cwiseAbs().maxCoeff() <= tol;
}

IntensityVolume::IntensityVolume(GridMeta meta, std::vector<float> data)
    : Volume<float>(std::move(meta), std::move(data)) {
    for (const float x : data_) {
        if (!std::isfinite(x)) throw DomainError("intensity volume contains NaN or Inf");
    }
}

LabelVolume::LabelVolume(GridMeta meta, std::vector<Label> data) : Volume<Label>(std::move(meta), std::move(data)) {
    std::vector<bool> present(65536, false);
    for (const Label l : data_) present[l] = true;
    for (std::size_t l = 0; l < present.size(); ++l) {
        if (present[l]) label_set_.push_back(static_cast<Label>(l));
    }
}

namespace {

template <typename T>
std::pair<GridMeta, std::vector<T>> crop_or_pad_impl(const Volume<T>& v, const Dims& target, T fill) {
    const Dims& in = v.meta().dims();
    std::array<int, 3> shift{};
    for (int a = 0; a < 3; ++a) {
        if (target[a] < 1) throw UsageError("crop_or_pad target dims must be >= 1");
        // new index n maps to old index n + shift
        shift[a] = in[a] >= target[a] ? (in[a] - target[a]) / 2 : -((target[a] - in[a]) / 2);
    }
    Affine affine = v.meta().affine();
    affine.block<3, 1>(0, 3) = v.meta().voxel_to_world(Eigen::Vector3d(shift[0], shift[1], shift[2]));
    GridMeta meta(target, affine);

    std::vector<T> out(meta.voxel_count(), fill);
    for (int k = 0; k < target[2]; ++k) {
        const int sk = k + shift[2];
        if (sk < 0 || sk >= in[2]) continue;
        for (int j = 0; j < target[1]; ++j) {
            const int sj = j + shift[1];
            if (sj < 0 || sj >= in[1]) continue;
            const int i_lo = std::max(0, -shift[0]);
            const int i_hi = std::min(target[0], in[0] - shift[0]);
            for (int i = i_lo; i < i_hi; ++i) {
                out[meta.index(i, j, k)] = v.at(i + shift[0], sj, sk);
            }
        }
    }
    return {std::move(meta), std::move(out)};
}

GridMeta scaled_grid(const GridMeta& in, const Dims& dims, const Spacing& spacing) {
    Affine affine = in.affine();
    for (int a = 0; a < 3; ++a) affine.block<3, 1>(0, a) *= spacing[a] / in.spacing()[a];
    return GridMeta(dims, affine);
}

Dims resampled_dims(const GridMeta& meta, const Spacing& target) {
    Dims out{};
    for (int a = 0; a < 3; ++a) {
        if (!(target[a] > 0.0)) throw UsageError("resample target spacing must be > 0");
        out[a] = std::max(1, static_cast<int>(std::lround(meta.dims()[a] * meta.spacing()[a] / target[a])));
    }
    return out;
}

// One linear pass along `axis`; output index o samples input coordinate o * scale.
std::vector<float> linear_pass(const std::vector<float>& in, Dims& dims, int axis, int out_n, double scale) {
    const int n = dims[axis];
    std::vector<int> i0(out_n), i1(out_n);
    std::vector<double> w(out_n);
    for (int o = 0; o < out_n; ++o) {
        const double c = o * scale;
        if (c <= 0.0) {
            i0[o] = i1[o] = 0;
            w[o] = 0.0;
        } else if (c >= n - 1) {
            i0[o] = i1[o] = n - 1;
            w[o] = 0.0;
        } else {
            i0[o] = static_cast<int>(std::floor(c));
            i1[o] = i0[o] + 1;
            w[o] = c - i0[o];
        }
    }
    Dims od = dims;
    od[axis] = out_n;
    std::vector<float> out(static_cast<std::size_t>(od[0]) * od[1] * od[2]);
    const std::size_t stride_in = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(dims[0]) : static_cast<std::size_t>(dims[0]) * dims[1];
    const std::size_t stride_out = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(od[0]) : static_cast<std::size_t>(od[0]) * od[1];
    // iterate over all lines along `axis`
    const int ax_b = axis == 0 ? 1 : 0;
    const int ax_c = axis == 2 ? 1 : 2;
    for (int c = 0; c < od[ax_c]; ++c) {
        for (int b = 0; b < od[ax_b]; ++b) {
            std::array<int, 3> idx{};
            idx[ax_b] = b;
            idx[ax_c] = c;
            idx[axis] = 0;
            const std::size_t base_in = idx[0] + static_cast<std::size_t>(dims[0]) * (idx[1] + static_cast<std::size_t>(dims[1]) * idx[2]);
            const std::size_t base_out = idx[0] + static_cast<std::size_t>(od[0]) * (idx[1] + static_cast<std::size_t>(od[1]) * idx[2]);
            for (int o = 0; o < out_n; ++o) {
                const double a = in[base_in + i0[o] * stride_in];
                const double bval = in[base_in + i1[o] * stride_in];
                out[base_out + o * stride_out] = static_cast<float>(a + w[o] * (bval - a));
            }
        }
    }
    dims = od;
    return out;
}

template <typename T>
std::vector<T> nearest_impl(const Volume<T>& v, const Dims& out_dims, const Spacing& target) {
    const Dims& in = v.meta().dims();
    std::array<std::vector<int>, 3> src;
    for (int a = 0; a < 3; ++a) {
        const double scale = target[a] / v.meta().spacing()[a];
        src[a].resize(out_dims[a]);
        for (int o = 0; o < out_dims[a]; ++o) {
            const long s = std::lround(std::floor(o * scale + 0.5));
            src[a][o] = s < in[a] ? static_cast<int>(s) : -1;
        }
    }
    std::vector<T> out(static_cast<std::size_t>(out_dims[0]) * out_dims[1] * out_dims[2], T{0});
    std::size_t n = 0;
    for (int k = 0; k < out_dims[2]; ++k) {
        for (int j = 0; j < out_dims[1]; ++j) {
            for (int i = 0; i < out_dims[0]; ++i, ++n) {
                if (src[0][i] < 0 || src[1][j] < 0 || src[2][k] < 0) continue;
                out[n] = v.at(src[0][i], src[1][j], src[2][k]);
            }
        }
    }
    return out;
}

} // namespace

IntensityVolume crop_or_pad(const IntensityVolume& v, const Dims& target, float fill) {
    auto [meta, data] = crop_or_pad_impl<float>(v, target, fill);
    return IntensityVolume(std::move(meta), std::move(data));
}

LabelVolume crop_or_pad(const LabelVolume& v, const Dims& target, Label fill) {
    auto [meta, data] = crop_or_pad_impl<Label>(v, target, fill);
    return LabelVolume(std::move(meta), std::move(data));
}

IntensityVolume rescale_01(const IntensityVolume& v) {
    const auto [mn_it, mx_it] = std::minmax_element(v.data().begin(), v.data().end());
    const double mn = *mn_it;
    const double range = static_cast<double>(*mx_it) - mn;
    std::vector<float> out(v.size(), 0.0f);
    if (range > 0.0) {
        for (std::size_t n = 0; n < out.size(); ++n) {
            out[n] = static_cast<float>((v[n] - mn) / range);
        }
    }
    return IntensityVolume(v.meta(), std::move(out));
}

IntensityVolume resample_onto(const IntensityVolume& v, const Dims& dims, const Spacing& spacing) {
    GridMeta meta = scaled_grid(v.meta(), dims, spacing);
    std::vector<float> data(v.data().begin(), v.data().end());
    Dims cur = v.meta().dims();
    for (int a = 0; a < 3; ++a) {
        const double scale = spacing[a] / v.meta().spacing()[a];
        if (scale == 1.0 && dims[a] == cur[a]) continue;
        data = linear_pass(data, cur, a, dims[a], scale);
    }
    return IntensityVolume(std::move(meta), std::move(data));
}

IntensityVolume resample(const IntensityVolume& v, const Spacing& target, Interpolation interp) {
    const Dims dims = resampled_dims(v.meta(), target);
    if (interp == Interpolation::trilinear) return resample_onto(v, dims, target);
    GridMeta meta = scaled_grid(v.meta(), dims, target);
    return IntensityVolume(std::move(meta), nearest_impl(v, dims, target));
}

LabelVolume resample(const LabelVolume& v, const Spacing& target, Interpolation interp) {
    if (interp != Interpolation::nearest) throw UsageError("label volumes can only be resampled with nearest interpolation");
    const Dims dims = resampled_dims(v.meta(), target);
    GridMeta meta = scaled_grid(v.meta(), dims, target);
    return LabelVolume(std::move(meta), nearest_impl(v, dims, target));
}

} // namespace synthba
