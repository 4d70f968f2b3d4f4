// synthba: command-line front end for the synthetic brain MRI generator.
//
// Exit codes: 0 success, 1 config/usage error, 2 I/O error, 3 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "synthba/batch.hpp"
#include "synthba/errors.hpp"
#include "synthba/gmm.hpp"
#include "synthba/metrics.hpp"
#include "synthba/nifti.hpp"
#include "synthba/phantom.hpp"
#include "synthba/pipeline.hpp"

namespace fs = std::filesystem;
using namespace synthba;

namespace {

GeneratorConfig resolve_config(const std::string& path, std::optional<std::uint64_t> seed) {
    GeneratorConfig cfg = path.empty() ? GeneratorConfig{} : load_generator_config(path);
    if (seed) cfg.master_seed = *seed;
    return cfg;
}

void write_text(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text << '\n';
    if (!out) throw IoError("write failed: " + path);
}

int cmd_generate(const std::string& seg_path, const std::string& cfg_path, std::optional<std::uint64_t> seed,
                 std::string subject, std::uint64_t index, const std::string& out, bool preprocess) {
    const GeneratorConfig cfg = resolve_config(cfg_path, seed);
    const LabelVolume seg = load_label_volume(seg_path);
    if (subject.empty()) subject = nifti_stem(seg_path);
    IntensityVolume x = generate(seg, cfg, SampleSeed{cfg.master_seed, subject, index});
    if (preprocess) x = preprocess_for_training(x, cfg);
    if (out == "-") {
        write_nifti(std::cout, x);
        std::cout.flush();
    } else {
        save_volume(x, out);
    }
    return 0;
}

int cmd_estimate_priors(const std::vector<std::string>& image_dirs, const std::vector<std::string>& seg_dirs,
                        const std::vector<std::string>& names, const std::string& out) {
    if (image_dirs.size() != seg_dirs.size() || image_dirs.size() != names.size()) {
        throw UsageError("--images, --segs and --sequence must be given the same number of times");
    }
    std::vector<SequenceSamples> sequences;
    for (std::size_t q = 0; q < names.size(); ++q) {
        SequenceSamples seq;
        seq.name = names[q];
        for (const fs::path& img : list_nifti_files(image_dirs[q])) {
            const fs::path seg = fs::path(seg_dirs[q]) / img.filename();
            if (!fs::exists(seg)) throw DomainError("no segmentation for " + img.string() + " in " + seg_dirs[q]);
            // priors live on the [0, 1] scale the generator synthesizes in
            seq.pairs.push_back({rescale_01(load_intensity_volume(img)), load_label_volume(seg)});
        }
        if (seq.pairs.empty()) throw IoError("no images in " + image_dirs[q]);
        sequences.push_back(std::move(seq));
    }
    save_priors(estimate_priors(sequences), out);
    return 0;
}

int cmd_eval(const std::string& predictions, const std::string& score_col, const std::string& set_col,
             const std::vector<std::string>& avg_specs, const std::string& out) {
    std::map<std::string, std::vector<std::string>> subsets;
    for (const std::string& spec : avg_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--avg expects NAME=set1,set2,...");
        std::vector<std::string> members = split_csv_line(spec.substr(eq + 1));
        subsets[spec.substr(0, eq)] = members;
    }
    const auto records = read_predictions(fs::path(predictions), score_col, set_col);
    if (records.empty()) throw DomainError("no prediction rows in " + predictions);
    write_text(eval_report_json(records, subsets), out);
    return 0;
}

int cmd_phantom(int n, int dims, int labels, const std::string& dist, std::uint64_t seed, double atrophy, const std::string& out) {
    PhantomSpec base;
    base.dims = {dims, dims, dims};
    base.n_labels = labels;
    base.atrophy_coeff = atrophy;
    const AgeDistribution d = dist == "bimodal" ? AgeDistribution::bimodal : AgeDistribution::uniform;
    fs::create_directories(out);
    std::ofstream ages(fs::path(out) / "ages.csv");
    if (!ages) throw IoError("cannot write ages.csv in " + out);
    ages << "subject_id,age\n";
    for (const CohortMember& m : make_cohort(n, d, seed, base)) {
        save_volume(m.phantom.labels, fs::path(out) / (m.subject_id + ".nii.gz"));
        ages << m.subject_id << ',' << m.phantom.age << '\n';
    }
    if (!ages) throw IoError("write failed: ages.csv");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-randomized synthetic MRI generation from brain label maps"};
    app.require_subcommand(1);

    std::string cfg_path, out, seg;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool preprocess = false;

    auto* gen = app.add_subcommand("generate", "Generate one synthetic volume from a label map");
    std::string subject;
    std::uint64_t index = 0;
    gen->add_option("--seg", seg, "Label map (.nii/.nii.gz)")->required();
    gen->add_option("--config", cfg_path, "Generator config JSON");
    gen->add_option("--seed", seed, "Master seed (overrides the config)");
    gen->add_option("--subject", subject, "Subject id used for seeding (default: file stem)");
    gen->add_option("--index", index, "Sample index used for seeding");
    gen->add_option("--out", out, "Output path, or - for an uncompressed NIfTI on stdout")->required();
    gen->add_flag("--preprocess", preprocess, "Resample, crop/pad and rescale to the training grid");

    auto* batch = app.add_subcommand("run-batch", "Generate samples for every label map in a directory");
    std::string seg_dir;
    int samples = 1;
    batch->add_option("--segs", seg_dir, "Directory of label maps")->required();
    batch->add_option("--config", cfg_path, "Generator config JSON");
    batch->add_option("--seed", seed, "Master seed (overrides the config)");
    batch->add_option("--out", out, "Output directory")->required();
    batch->add_option("--samples", samples, "Samples per subject")->check(CLI::NonNegativeNumber);
    batch->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    batch->add_flag("--preprocess", preprocess, "Resample, crop/pad and rescale to the training grid");

    auto* stream = app.add_subcommand("stream", "Read '<seg> [index [subject]]' lines on stdin, print manifest rows");
    stream->add_option("--config", cfg_path, "Generator config JSON");
    stream->add_option("--seed", seed, "Master seed (overrides the config)");
    stream->add_option("--out", out, "Output directory")->required();
    stream->add_flag("--preprocess", preprocess, "Resample, crop/pad and rescale to the training grid");

    auto* est = app.add_subcommand("estimate-priors", "Estimate per-sequence Gaussian priors from images and segmentations");
    std::vector<std::string> image_dirs, seg_dirs, names;
    est->add_option("--images", image_dirs, "Image directory (one per sequence)")->required();
    est->add_option("--segs", seg_dirs, "Segmentation directory with matching file names (one per sequence)")->required();
    est->add_option("--sequence", names, "Sequence name (one per sequence)")->required();
    est->add_option("--out", out, "Output priors JSON")->required();

    auto* ev = app.add_subcommand("eval", "Brain-age evaluation statistics from a predictions CSV");
    std::string predictions, score_col = "score", set_col;
    std::vector<std::string> avg_specs;
    ev->add_option("--predictions", predictions, "CSV with subject_id,y_true,y_pred[,score]")->required();
    ev->add_option("--score-col", score_col, "Score column correlated with brain PAD");
    ev->add_option("--per-set-col", set_col, "Column naming the test set of each row");
    ev->add_option("--avg", avg_specs, "Named subset average, NAME=set1,set2,...");
    ev->add_option("--out", out, "Report JSON (default: stdout)");

    auto* be = app.add_subcommand("bench", "Measure generate + preprocess throughput");
    int iterations = 10;
    be->add_option("--seg", seg, "Label map")->required();
    be->add_option("--config", cfg_path, "Generator config JSON");
    be->add_option("--seed", seed, "Master seed (overrides the config)");
    be->add_option("--iterations", iterations, "Number of samples")->check(CLI::PositiveNumber);
    be->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    be->add_option("--out", out, "Report JSON (default: stdout)");

    auto* ph = app.add_subcommand("phantom", "Write a cohort of synthetic ageing label-map phantoms");
    int n = 10, dims = 64, labels = 8;
    std::string dist = "uniform";
    std::uint64_t phantom_seed = 0;
    double atrophy = 0.05;
    ph->add_option("--n", n, "Number of phantoms")->check(CLI::PositiveNumber);
    ph->add_option("--dims", dims, "Edge length in voxels")->check(CLI::Range(16, 1024));
    ph->add_option("--labels", labels, "Number of labels including background")->check(CLI::Range(3, 65535));
    ph->add_option("--dist", dist, "Age distribution")->check(CLI::IsMember({"uniform", "bimodal"}));
    ph->add_option("--seed", phantom_seed, "Cohort seed");
    ph->add_option("--atrophy", atrophy, "Ventricle radius growth, voxels per year");
    ph->add_option("--out", out, "Output directory")->required();

    app.add_subcommand("default-config", "Print the default generator config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_generate(seg, cfg_path, seed, subject, index, out, preprocess);
        if (*batch) {
            const GeneratorConfig cfg = resolve_config(cfg_path, seed);
            const auto rows = run_batch(BatchOptions{seg_dir, out, samples, workers, preprocess}, cfg);
            std::size_t failed = 0;
            for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
            std::cerr << rows.size() - failed << " samples written, " << failed << " failed\n";
            return failed == 0 ? 0 : 3;
        }
        if (*stream) {
            const GeneratorConfig cfg = resolve_config(cfg_path, seed);
            return stream_generate(std::cin, std::cout, cfg, out, preprocess) == 0 ? 0 : 3;
        }
        if (*est) return cmd_estimate_priors(image_dirs, seg_dirs, names, out);
        if (*ev) return cmd_eval(predictions, score_col, set_col, avg_specs, out);
        if (*be) {
            const GeneratorConfig cfg = resolve_config(cfg_path, seed);
            write_text(bench(load_label_volume(seg), cfg, iterations, workers).to_json(), out);
            return 0;
        }
        if (*ph) return cmd_phantom(n, dims, labels, dist, phantom_seed, atrophy, out);
        std::cout << generator_config_to_json(GeneratorConfig{}) << '\n';
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
