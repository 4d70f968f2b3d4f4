#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "synthba/pipeline.hpp"

namespace synthba {

struct ManifestRow {
    std::string subject_id;
    std::uint64_t sample_index = 0;
    std::uint64_t seed = 0;
    std::string path;
    std::string error; // empty on success
};

inline constexpr const char* kManifestHeader = "subject_id,sample_index,seed,path";

struct BatchOptions {
    std::filesystem::path seg_dir;
    std::filesystem::path out_dir;
    int samples_per_subject = 1;
    int workers = 1;
    bool preprocess = false;
};

/// Generates `samples_per_subject` volumes for every label map in seg_dir as
/// <subject>_<index>.nii.gz and writes manifest.csv next to them. Rows are
/// sorted by subject then index, so the output does not depend on `workers`.
/// A subject whose segmentation cannot be read gets rows carrying the error.
std::vector<ManifestRow> run_batch(const BatchOptions& opts, const GeneratorConfig& cfg);
std::vector<ManifestRow> run_batch(const std::filesystem::path& seg_dir, const std::filesystem::path& cfg_path,
                                   const std::filesystem::path& out_dir, int samples_per_subject, int workers);

/// Failed rows put "error:<message>" in the path column.
/// One CSV line, no header.
void write_manifest_row(const ManifestRow& row, std::ostream& os);
void write_manifest(const std::vector<ManifestRow>& rows, std::ostream& os);
void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);

/// Sorted .nii / .nii.gz files of a directory.
std::vector<std::filesystem::path> list_nifti_files(const std::filesystem::path& dir);

/// Line-oriented streaming mode. Each input line is
///   <segmentation path> [sample_index [subject_id]]
/// and produces one output volume in out_dir plus one manifest row on `out`.
/// Returns the number of failed requests.
int stream_generate(std::istream& in, std::ostream& out, const GeneratorConfig& cfg, const std::filesystem::path& out_dir,
                    bool preprocess);

struct BenchReport {
    int workers = 1;
    std::size_t samples = 0;
    double wall_seconds = 0.0;
    double samples_per_second = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    std::vector<double> latencies_ms;

    std::string to_json() const;
};

/// Runs generate + preprocess_for_training `iterations` times over `workers`
/// threads and reports wall-clock throughput and per-sample latency.
BenchReport bench(const LabelVolume& seg, const GeneratorConfig& cfg, int iterations, int workers);

/// Nearest-rank percentile of an unsorted sample.
double percentile(std::vector<double> values, double q);

} // namespace synthba
