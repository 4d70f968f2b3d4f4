#include "synthba/batch.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "synthba/nifti.hpp"

namespace synthba {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

IntensityVolume produce(const LabelVolume& seg, const GeneratorConfig& cfg, const SampleSeed& seed, bool preprocess) {
    IntensityVolume x = generate(seg, cfg, seed);
    return preprocess ? preprocess_for_training(x, cfg) : x;
}

} // namespace

std::vector<std::filesystem::path> list_nifti_files(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_nifti_path(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ManifestRow> run_batch(const BatchOptions& opts, const GeneratorConfig& cfg) {
    cfg.validate();
    if (opts.samples_per_subject < 0) throw UsageError("samples_per_subject must be >= 0");
    const auto files = list_nifti_files(opts.seg_dir);
    if (files.empty()) throw IoError("no NIfTI label maps in " + opts.seg_dir.string());
    std::filesystem::create_directories(opts.out_dir);

    struct Subject {
        std::filesystem::path file;
        std::string id;
        std::once_flag loaded;
        std::optional<LabelVolume> seg;
        std::string error;
    };
    std::vector<Subject> subjects(files.size());
    for (std::size_t s = 0; s < files.size(); ++s) {
        subjects[s].file = files[s];
        subjects[s].id = nifti_stem(files[s]);
    }

    const auto per = static_cast<std::size_t>(opts.samples_per_subject);
    std::vector<ManifestRow> rows(subjects.size() * per);
    parallel_for(rows.size(), opts.workers, [&](std::size_t task) {
        Subject& subj = subjects[task / per];
        std::call_once(subj.loaded, [&] {
            try {
                subj.seg.emplace(load_label_volume(subj.file));
            } catch (const std::exception& e) {
                subj.error = e.what();
            }
        });
        ManifestRow& row = rows[task];
        row.subject_id = subj.id;
        row.sample_index = task % per;
        const SampleSeed seed{cfg.master_seed, subj.id, row.sample_index};
        row.seed = seed.derive();
        if (!subj.seg) {
            row.error = subj.error;
            return;
        }
        const auto path = opts.out_dir / (subj.id + "_" + std::to_string(row.sample_index) + ".nii.gz");
        try {
            save_volume(produce(*subj.seg, cfg, seed, opts.preprocess), path);
            row.path = path.string();
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });
    write_manifest(rows, opts.out_dir / "manifest.csv");
    return rows;
}

std::vector<ManifestRow> run_batch(const std::filesystem::path& seg_dir, const std::filesystem::path& cfg_path,
                                   const std::filesystem::path& out_dir, int samples_per_subject, int workers) {
    const GeneratorConfig cfg = load_generator_config(cfg_path);
    return run_batch(BatchOptions{seg_dir, out_dir, samples_per_subject, workers, false}, cfg);
}

void write_manifest_row(const ManifestRow& r, std::ostream& os) {
    os << csv_field(r.subject_id) << ',' << r.sample_index << ',' << r.seed << ','
       << csv_field(r.error.empty() ? r.path : "error:" + r.error) << '\n';
}

void write_manifest(const std::vector<ManifestRow>& rows, std::ostream& os) {
    os << kManifestHeader << '\n';
    for (const auto& r : rows) write_manifest_row(r, os);
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_manifest(rows, out);
    if (!out) throw IoError("write failed: " + path.string());
}

int stream_generate(std::istream& in, std::ostream& out, const GeneratorConfig& cfg, const std::filesystem::path& out_dir,
                    bool preprocess) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    out << kManifestHeader << '\n' << std::flush;
    int failures = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string seg_path;
        if (!(ls >> seg_path)) continue;
        ManifestRow row;
        if (!(ls >> row.sample_index)) row.sample_index = 0;
        if (!(ls >> row.subject_id)) row.subject_id = nifti_stem(seg_path);
        const SampleSeed seed{cfg.master_seed, row.subject_id, row.sample_index};
        row.seed = seed.derive();
        try {
            const LabelVolume seg = load_label_volume(seg_path);
            const auto path = out_dir / (row.subject_id + "_" + std::to_string(row.sample_index) + ".nii.gz");
            save_volume(produce(seg, cfg, seed, preprocess), path);
            row.path = path.string();
        } catch (const std::exception& e) {
            row.error = e.what();
            ++failures;
        }
        write_manifest_row(row, out);
        out.flush();
    }
    return failures;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::string BenchReport::to_json() const {
    nlohmann::json doc{{"workers", workers},
                       {"samples", samples},
                       {"wall_seconds", wall_seconds},
                       {"samples_per_second", samples_per_second},
                       {"p50_ms", p50_ms},
                       {"p95_ms", p95_ms},
                       {"latencies_ms", latencies_ms}};
    return doc.dump(2);
}

BenchReport bench(const LabelVolume& seg, const GeneratorConfig& cfg, int iterations, int workers) {
    if (iterations < 1) throw UsageError("bench needs at least one iteration");
    cfg.validate();
    BenchReport report;
    report.workers = std::max(1, workers);
    report.latencies_ms.resize(static_cast<std::size_t>(iterations));
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    parallel_for(report.latencies_ms.size(), report.workers, [&](std::size_t i) {
        const auto t0 = clock::now();
        const IntensityVolume out = produce(seg, cfg, SampleSeed{cfg.master_seed, "bench", i}, true);
        report.latencies_ms[i] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    });
    report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    report.samples = report.latencies_ms.size();
    report.samples_per_second = static_cast<double>(report.samples) / report.wall_seconds;
    report.p50_ms = percentile(report.latencies_ms, 0.50);
    report.p95_ms = percentile(report.latencies_ms, 0.95);
    return report;
}

} // namespace synthba
