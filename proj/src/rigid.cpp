#include "synthba/rigid.hpp"

#include <cmath>
#include <numbers>

namespace synthba {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

RigidTransform3D from_matrix(const Eigen::Matrix3d& r, const Eigen::Vector3d& offset, const Eigen::Vector3d& center) {
    // offset is the image of the world origin: p' = r p + offset
    RigidTransform3D t;
    // Eigen returns angles (a, b, c) with r = Rx(a) Ry(b) Rz(c)
    t.rotation_deg = r.eulerAngles(0, 1, 2) / kDegToRad;
    t.center_mm = center;
    t.translation_mm = offset - center + r * center;
    return t;
}

} // namespace

Eigen::Matrix3d RigidTransform3D::rotation() const {
    const Eigen::Vector3d rad = rotation_deg * kDegToRad;
    return (Eigen::AngleAxisd(rad.x(), Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(rad.y(), Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(rad.z(), Eigen::Vector3d::UnitZ()))
        .toRotationMatrix();
}

Eigen::Vector3d RigidTransform3D::apply(const Eigen::Vector3d& p) const {
    return rotation() * (p - center_mm) + center_mm + translation_mm;
}

Eigen::Matrix4d RigidTransform3D::matrix() const {
    const Eigen::Matrix3d r = rotation();
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = r;
    m.block<3, 1>(0, 3) = center_mm + translation_mm - r * center_mm;
    return m;
}

void RigidSamplingConfig::validate() const {
    if (!(rot_range_deg >= 0.0) || !(trans_range_mm >= 0.0)) {
        throw ConfigError("rigid sampling ranges must be non-negative");
    }
}

RigidTransform3D sample_rigid(const RigidSamplingConfig& cfg, RandomStream& rng) {
    cfg.validate();
    RigidTransform3D t;
    for (int a = 0; a < 3; ++a) t.rotation_deg[a] = rng.uniform(-cfg.rot_range_deg, cfg.rot_range_deg);
    for (int a = 0; a < 3; ++a) t.translation_mm[a] = rng.uniform(-cfg.trans_range_mm, cfg.trans_range_mm);
    if (cfg.rot_range_deg == 0.0) t.rotation_deg.setZero();
    if (cfg.trans_range_mm == 0.0) t.translation_mm.setZero();
    return t;
}

RigidTransform3D sample_rigid_for(const GridMeta& meta, const RigidSamplingConfig& cfg, RandomStream& rng) {
    RigidTransform3D t = sample_rigid(cfg, rng);
    t.center_mm = meta.center_world();
    return t;
}

RigidTransform3D compose(const RigidTransform3D& a, const RigidTransform3D& b) {
    const Eigen::Matrix4d m = a.matrix() * b.matrix();
    return from_matrix(m.block<3, 3>(0, 0), m.block<3, 1>(0, 3), b.center_mm);
}

RigidTransform3D invert(const RigidTransform3D& t) {
    // p = R^T (p' - c') + c' - translation, with c' = center + translation
    RigidTransform3D inv;
    inv.rotation_deg = t.rotation().transpose().eulerAngles(0, 1, 2) / kDegToRad;
    inv.center_mm = t.center_mm + t.translation_mm;
    inv.translation_mm = -t.translation_mm;
    if (t.rotation_deg.isZero(0.0)) inv.rotation_deg.setZero();
    return inv;
}

LabelVolume apply_rigid_labels(const LabelVolume& s, const RigidTransform3D& t) {
    const GridMeta& meta = s.meta();
    // output voxel -> world -> preimage in world -> input voxel
    const Eigen::Matrix4d vox_map = meta.affine().inverse() * invert(t).matrix() * meta.affine();
    const Eigen::Matrix3d lin = vox_map.block<3, 3>(0, 0);
    const Eigen::Vector3d off = vox_map.block<3, 1>(0, 3);
    const Dims& d = meta.dims();

    std::vector<Label> out(meta.voxel_count(), 0);
    std::size_t n = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            const Eigen::Vector3d row = lin.col(1) * j + lin.col(2) * k + off;
            for (int i = 0; i < d[0]; ++i, ++n) {
                const Eigen::Vector3d src = row + lin.col(0) * i;
                const double si = std::floor(src.x() + 0.5);
                const double sj = std::floor(src.y() + 0.5);
                const double sk = std::floor(src.z() + 0.5);
                if (si < 0 || sj < 0 || sk < 0 || si >= d[0] || sj >= d[1] || sk >= d[2]) continue;
                out[n] = s.at(static_cast<int>(si), static_cast<int>(sj), static_cast<int>(sk));
            }
        }
    }
    return LabelVolume(meta, std::move(out));
}

} // namespace synthba
