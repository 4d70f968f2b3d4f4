#pragma once

#include <filesystem>
#include <ostream>
#include <variant>

#include "synthba/volume.hpp"

namespace synthba {

enum class VolumeKind { label, intensity };

using AnyVolume = std::variant<LabelVolume, IntensityVolume>;

/// Reads a single-volume NIfTI-1 file (.nii or .nii.gz). The sform is used
/// when sform_code > 0, then the qform, then pixdim alone. scl_slope and
/// scl_inter are applied to the stored values.
AnyVolume load_volume(const std::filesystem::path& path, VolumeKind kind);
LabelVolume load_label_volume(const std::filesystem::path& path);
IntensityVolume load_intensity_volume(const std::filesystem::path& path);

/// Writes uint16 labels or float32 intensities with the sform set. A
/// `.nii.gz` suffix selects gzip compression.
void save_volume(const LabelVolume& v, const std::filesystem::path& path);
void save_volume(const IntensityVolume& v, const std::filesystem::path& path);

/// Uncompressed single-file NIfTI-1 stream.
void write_nifti(std::ostream& os, const IntensityVolume& v);
void write_nifti(std::ostream& os, const LabelVolume& v);

/// True for paths ending in .nii or .nii.gz.
bool is_nifti_path(const std::filesystem::path& path);
/// File name with the .nii / .nii.gz suffix removed.
std::string nifti_stem(const std::filesystem::path& path);

} // namespace synthba
