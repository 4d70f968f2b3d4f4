#pragma once

#include <Eigen/Dense>

#include "synthba/random.hpp"
#include "synthba/volume.hpp"

namespace synthba {

/// Rotation about a pivot followed by a translation, in world mm:
///   p' = R (p - center) + center + translation
/// with R = Rx * Ry * Rz (intrinsic x, then y, then z).
struct RigidTransform3D {
    Eigen::Vector3d rotation_deg = Eigen::Vector3d::Zero();
    Eigen::Vector3d translation_mm = Eigen::Vector3d::Zero();
    Eigen::Vector3d center_mm = Eigen::Vector3d::Zero();

    Eigen::Matrix3d rotation() const;
    Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
    /// Homogeneous world-to-world matrix.
    Eigen::Matrix4d matrix() const;

    static RigidTransform3D identity() { return {}; }
};

struct RigidSamplingConfig {
    double rot_range_deg = 15.0;
    double trans_range_mm = 10.0;

    void validate() const;
};

/// Each rotation and translation component uniform in +/- its range.
/// The pivot is the world origin.
RigidTransform3D sample_rigid(const RigidSamplingConfig& cfg, RandomStream& rng);
/// As sample_rigid(), pivoting about the world center of `meta`.
RigidTransform3D sample_rigid_for(const GridMeta& meta, const RigidSamplingConfig& cfg, RandomStream& rng);

/// compose(a, b) applies b first, then a.
RigidTransform3D compose(const RigidTransform3D& a, const RigidTransform3D& b);
RigidTransform3D invert(const RigidTransform3D& t);

/// Pull-based nearest-neighbour warp on the input grid; voxels whose
/// preimage falls outside the field of view become background.
LabelVolume apply_rigid_labels(const LabelVolume& s, const RigidTransform3D& t);

} // namespace synthba
