#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "synthba/errors.hpp"

namespace synthba {

using Label = std::uint16_t;
using Dims = std::array<int, 3>;
using Spacing = std::array<double, 3>;
using Affine = Eigen::Matrix4d;

/// Voxel grid geometry. The affine maps voxel indices (i, j, k) to world mm.
class GridMeta {
public:
    /// Axis-aligned grid with the given spacing and voxel (0,0,0) at `origin`.
    GridMeta(Dims dims, Spacing spacing, const Eigen::Vector3d& origin = Eigen::Vector3d::Zero());
    /// Spacing is taken from the column norms of the affine.
    GridMeta(Dims dims, const Affine& affine);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    const Affine& affine() const noexcept { return affine_; }

    std::size_t voxel_count() const noexcept {
        return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    }
    std::size_t index(int i, int j, int k) const noexcept {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
    }

    Eigen::Vector3d voxel_to_world(const Eigen::Vector3d& ijk) const;
    Eigen::Vector3d world_to_voxel(const Eigen::Vector3d& xyz) const;
    /// World position of the geometric center of the voxel grid.
    Eigen::Vector3d center_world() const;

    /// Same dims and affine within `tol`.
    bool same_grid(const GridMeta& other, double tol = 1e-6) const;

private:
    void validate() const;

    Dims dims_;
    Spacing spacing_;
    Affine affine_;
};

/// Immutable voxel array on a grid, x fastest.
template <typename T>
class Volume {
public:
    using value_type = T;

    Volume(GridMeta meta, std::vector<T> data) : meta_(std::move(meta)), data_(std::move(data)) {
        if (data_.size() != meta_.voxel_count()) {
            throw UsageError("volume data length does not match grid dims");
        }
    }

    const GridMeta& meta() const noexcept { return meta_; }
    std::span<const T> data() const noexcept { return data_; }
    std::size_t size() const noexcept { return data_.size(); }

    const T& operator[](std::size_t n) const noexcept { return data_[n]; }
    const T& at(int i, int j, int k) const noexcept { return data_[meta_.index(i, j, k)]; }

    bool operator==(const Volume& other) const {
        return meta_.same_grid(other.meta_, 0.0) && data_ == other.data_;
    }

protected:
    GridMeta meta_;
    std::vector<T> data_;
};

/// Real-valued image; every voxel finite.
class IntensityVolume : public Volume<float> {
public:
    IntensityVolume(GridMeta meta, std::vector<float> data);
};

/// Integer label map; label 0 is background.
class LabelVolume : public Volume<Label> {
public:
    LabelVolume(GridMeta meta, std::vector<Label> data);

    /// Sorted distinct labels present.
    const std::vector<Label>& label_set() const& noexcept { return label_set_; }
    // a temporary hands its set over instead of leaving a dangling reference
    std::vector<Label> label_set() && noexcept { return std::move(label_set_); }

private:
    std::vector<Label> label_set_;
};

enum class Interpolation { nearest, trilinear };

/// Centered crop and/or pad to `target`. Odd remainders go to the high side.
IntensityVolume crop_or_pad(const IntensityVolume& v, const Dims& target, float fill = 0.0f);
LabelVolume crop_or_pad(const LabelVolume& v, const Dims& target, Label fill = 0);

/// (x - min) / (max - min); constant input maps to zeros.
IntensityVolume rescale_01(const IntensityVolume& v);

/// Axis-aligned resample keeping voxel (0,0,0) at the same world position.
/// Output dims are round(dims * spacing / target) with a minimum of 1.
/// Trilinear clamps to the edge; nearest returns background outside.
IntensityVolume resample(const IntensityVolume& v, const Spacing& target, Interpolation interp = Interpolation::trilinear);
LabelVolume resample(const LabelVolume& v, const Spacing& target, Interpolation interp = Interpolation::nearest);

/// Trilinear resample onto an explicit axis-aligned grid that shares the
/// origin and axis directions of `v`.
IntensityVolume resample_onto(const IntensityVolume& v, const Dims& dims, const Spacing& spacing);

} // namespace synthba
