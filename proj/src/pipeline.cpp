#include "synthba/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace synthba {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown config key '" + std::string(where) + "." + key + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

Dims read_dims(const json& v) {
    if (v.is_number_integer()) {
        const int n = v.get<int>();
        return {n, n, n};
    }
    if (!v.is_array() || v.size() != 3) throw ConfigError("dims must be an integer or a triple");
    return {v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
}

std::array<double, 2> read_range(const json& v) {
    if (!v.is_array() || v.size() != 2) throw ConfigError("ranges must be [lo, hi] pairs");
    return {v[0].get<double>(), v[1].get<double>()};
}

} // namespace

void GeneratorConfig::validate() const {
    rigid.validate();
    uniform_prior.validate();
    bias.validate();
    gamma.validate();
    resolution.validate();
    if (!(background_zero_prob >= 0.0 && background_zero_prob <= 1.0)) throw ConfigError("background_zero_prob must be in [0, 1]");
    if (prior_mode == PriorMode::gaussian && !priors && !prior_file) {
        throw ConfigError("prior_mode 'gaussian' requires prior_file");
    }
    if (priors) priors->validate();
    if (!(output.spacing_mm > 0.0)) throw ConfigError("output.spacing_mm must be > 0");
    for (const int d : output.dims) {
        if (d < 1) throw ConfigError("output.dims must be >= 1");
    }
}

GeneratorConfig generator_config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
    GeneratorConfig cfg;
    try {
        const json doc = json::parse(text);
        check_keys(doc, "config",
                   {"rigid", "prior_mode", "uniform_prior", "prior_file", "bias", "gamma", "resolution", "background_zero_prob",
                    "master_seed", "output"});
        if (doc.contains("rigid")) {
            const json& r = doc["rigid"];
            check_keys(r, "rigid", {"rot_range_deg", "trans_range_mm"});
            read(r, "rot_range_deg", cfg.rigid.rot_range_deg);
            read(r, "trans_range_mm", cfg.rigid.trans_range_mm);
        }
        if (doc.contains("prior_mode")) {
            const std::string mode = doc["prior_mode"].get<std::string>();
            if (mode == "uniform") cfg.prior_mode = PriorMode::uniform;
            else if (mode == "gaussian") cfg.prior_mode = PriorMode::gaussian;
            else throw ConfigError("prior_mode must be 'uniform' or 'gaussian'");
        }
        if (doc.contains("uniform_prior")) {
            const json& u = doc["uniform_prior"];
            check_keys(u, "uniform_prior", {"mu_a", "mu_b", "sigma_a", "sigma_b"});
            read(u, "mu_a", cfg.uniform_prior.mu_a);
            read(u, "mu_b", cfg.uniform_prior.mu_b);
            read(u, "sigma_a", cfg.uniform_prior.sigma_a);
            read(u, "sigma_b", cfg.uniform_prior.sigma_b);
        }
        if (doc.contains("prior_file") && !doc["prior_file"].is_null()) {
            std::filesystem::path p = doc["prior_file"].get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            cfg.prior_file = p;
        }
        if (doc.contains("bias")) {
            const json& b = doc["bias"];
            check_keys(b, "bias", {"control_grid", "amplitude", "enabled"});
            if (b.contains("control_grid")) cfg.bias.control_grid = read_dims(b["control_grid"]);
            read(b, "amplitude", cfg.bias.amplitude);
            read(b, "enabled", cfg.bias.enabled);
        }
        if (doc.contains("gamma")) {
            const json& g = doc["gamma"];
            check_keys(g, "gamma", {"log_gamma_std", "enabled"});
            read(g, "log_gamma_std", cfg.gamma.log_gamma_std);
            read(g, "enabled", cfg.gamma.enabled);
        }
        if (doc.contains("resolution")) {
            const json& r = doc["resolution"];
            check_keys(r, "resolution", {"iso_spacing_range_mm", "aniso_axis_spacing_range_mm", "p_anisotropic", "enabled"});
            if (r.contains("iso_spacing_range_mm")) cfg.resolution.iso_spacing_range_mm = read_range(r["iso_spacing_range_mm"]);
            if (r.contains("aniso_axis_spacing_range_mm")) cfg.resolution.aniso_axis_spacing_range_mm = read_range(r["aniso_axis_spacing_range_mm"]);
            read(r, "p_anisotropic", cfg.resolution.p_anisotropic);
            read(r, "enabled", cfg.resolution.enabled);
        }
        read(doc, "background_zero_prob", cfg.background_zero_prob);
        if (doc.contains("master_seed")) {
            const json& s = doc["master_seed"];
            if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
                throw ConfigError("master_seed must be a non-negative integer");
            }
            cfg.master_seed = s.get<std::uint64_t>();
        }
        if (doc.contains("output")) {
            const json& o = doc["output"];
            check_keys(o, "output", {"spacing_mm", "dims"});
            read(o, "spacing_mm", cfg.output.spacing_mm);
            if (o.contains("dims")) cfg.output.dims = read_dims(o["dims"]);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (cfg.prior_mode == PriorMode::gaussian) {
        if (!cfg.prior_file) throw ConfigError("prior_mode 'gaussian' requires prior_file");
        cfg.priors = load_priors(*cfg.prior_file);
    }
    cfg.validate();
    return cfg;
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return generator_config_from_json(ss.str(), path.parent_path());
}

std::string generator_config_to_json(const GeneratorConfig& cfg) {
    json doc;
    doc["rigid"] = {{"rot_range_deg", cfg.rigid.rot_range_deg}, {"trans_range_mm", cfg.rigid.trans_range_mm}};
    doc["prior_mode"] = cfg.prior_mode == PriorMode::uniform ? "uniform" : "gaussian";
    doc["uniform_prior"] = {{"mu_a", cfg.uniform_prior.mu_a},
                            {"mu_b", cfg.uniform_prior.mu_b},
                            {"sigma_a", cfg.uniform_prior.sigma_a},
                            {"sigma_b", cfg.uniform_prior.sigma_b}};
    doc["prior_file"] = cfg.prior_file ? json(cfg.prior_file->string()) : json(nullptr);
    doc["bias"] = {{"control_grid", cfg.bias.control_grid}, {"amplitude", cfg.bias.amplitude}, {"enabled", cfg.bias.enabled}};
    doc["gamma"] = {{"log_gamma_std", cfg.gamma.log_gamma_std}, {"enabled", cfg.gamma.enabled}};
    doc["resolution"] = {{"iso_spacing_range_mm", cfg.resolution.iso_spacing_range_mm},
                         {"aniso_axis_spacing_range_mm", cfg.resolution.aniso_axis_spacing_range_mm},
                         {"p_anisotropic", cfg.resolution.p_anisotropic},
                         {"enabled", cfg.resolution.enabled}};
    doc["background_zero_prob"] = cfg.background_zero_prob;
    doc["master_seed"] = cfg.master_seed;
    doc["output"] = {{"spacing_mm", cfg.output.spacing_mm}, {"dims", cfg.output.dims}};
    return doc.dump(2);
}

std::uint64_t SampleSeed::derive() const {
    return combine64(combine64(mix64(master_seed), hash_string(subject_id)), mix64(sample_index));
}

Generated generate_traced(const LabelVolume& s, const GeneratorConfig& cfg, const SampleSeed& seed) {
    cfg.validate();
    GenerationTrace trace;

    // (B) rigid warp
    RandomStream rigid_rng = seed.stage_stream(kStageRigid);
    trace.rigid = sample_rigid_for(s.meta(), cfg.rigid, rigid_rng);
    const LabelVolume warped = apply_rigid_labels(s, trace.rigid);

    // (C) per-label GMM
    RandomStream prior_rng = seed.stage_stream(kStagePrior);
    if (cfg.prior_mode == PriorMode::uniform) {
        std::vector<Label> labels = s.label_set();
        if (labels.empty() || labels.front() != 0) labels.insert(labels.begin(), Label{0});
        trace.params = sample_params_uniform(cfg.uniform_prior, labels, prior_rng);
    } else {
        const GaussianPriorSet priors = cfg.priors ? *cfg.priors : load_priors(*cfg.prior_file);
        GaussianDraw draw = sample_params_gaussian(priors, std::nullopt, prior_rng);
        trace.params = std::move(draw.params);
        trace.sequence = draw.sequence;
        // coverage is judged on the input; the warp may push a label out of view
        for (const Label l : s.label_set()) {
            if (l != 0 && !trace.params.contains(l)) throw CoverageError("no intensity parameters for label " + std::to_string(l));
        }
    }
    RandomStream bg_rng = seed.stage_stream(kStageBackground);
    trace.background_zeroed = bg_rng.bernoulli(cfg.background_zero_prob);
    // out-of-field voxels are background; a prior without label 0 renders it black
    if (trace.background_zeroed || !trace.params.contains(0)) trace.params[0] = GaussianParams{0.0, 0.0};
    RandomStream synth_rng = seed.stage_stream(kStageSynth);
    IntensityVolume x = synthesize(warped, trace.params, synth_rng);

    // (D) bias field
    if (cfg.bias.enabled) {
        RandomStream bias_rng = seed.stage_stream(kStageBias);
        x = apply_bias(x, sample_bias_field(x.meta(), cfg.bias, bias_rng));
    }

    // (E) rescale, gamma
    x = rescale_01(x);
    if (cfg.gamma.enabled) {
        RandomStream gamma_rng = seed.stage_stream(kStageGamma);
        trace.gamma = sample_gamma(cfg.gamma, gamma_rng);
        x = gamma_transform(x, trace.gamma);
    }

    // (F) resolution
    trace.resolution = x.meta().spacing();
    if (cfg.resolution.enabled) {
        RandomStream res_rng = seed.stage_stream(kStageResolution);
        Spacing target = sample_resolution(cfg.resolution, x.meta().spacing(), res_rng);
        for (int a = 0; a < 3; ++a) target[a] = std::max(target[a], x.meta().spacing()[a]);
        trace.resolution = target;
        x = simulate_resolution(x, target);
    }
    return {std::move(x), std::move(trace)};
}

IntensityVolume generate(const LabelVolume& s, const GeneratorConfig& cfg, const SampleSeed& seed) {
    return generate_traced(s, cfg, seed).volume;
}

IntensityVolume preprocess_for_training(const IntensityVolume& x, const GeneratorConfig& cfg) {
    const double sp = cfg.output.spacing_mm;
    const IntensityVolume resampled = resample(x, Spacing{sp, sp, sp}, Interpolation::trilinear);
    // pad with the image minimum so padding lands on 0 and constant inputs stay constant
    const float fill = resampled.size() ? *std::min_element(resampled.data().begin(), resampled.data().end()) : 0.0f;
    return rescale_01(crop_or_pad(resampled, cfg.output.dims, fill));
}

} // namespace synthba
