#include "synthba/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace synthba {

namespace {

constexpr std::size_t kSynthChunk = 1 << 15;

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace

void UniformPrior::validate() const {
    if (!(mu_a <= mu_b)) throw ConfigError("uniform prior requires mu_a <= mu_b");
    if (!(0.0 <= sigma_a && sigma_a <= sigma_b)) throw ConfigError("uniform prior requires 0 <= sigma_a <= sigma_b");
}

std::vector<Label> GaussianPriorSet::labels() const {
    std::set<Label> all;
    for (const auto& seq : sequences) {
        for (const auto& [l, p] : seq.labels) all.insert(l);
    }
    return {all.begin(), all.end()};
}

void GaussianPriorSet::validate() const {
    if (sequences.empty()) throw UsageError("gaussian prior set has no sequences");
    const std::vector<Label> all = labels();
    for (const auto& seq : sequences) {
        for (const Label l : all) {
            const auto it = seq.labels.find(l);
            if (it == seq.labels.end()) {
                throw CoverageError("sequence '" + seq.name + "' has no prior for label " + std::to_string(l));
            }
            const LabelPrior& p = it->second;
            if (!(p.sigma_mu >= 0.0 && p.mu_sigma >= 0.0 && p.sigma_sigma >= 0.0) || !std::isfinite(p.mu_mu)) {
                throw ConfigError("sequence '" + seq.name + "' label " + std::to_string(l) + ": spreads must be >= 0");
            }
        }
    }
}

LabelParams sample_params_uniform(const UniformPrior& prior, std::span<const Label> labels, RandomStream& rng) {
    prior.validate();
    if (labels.empty()) throw UsageError("sample_params_uniform needs at least one label");
    LabelParams out;
    for (const Label l : labels) {
        GaussianParams p;
        p.mu = rng.uniform(prior.mu_a, prior.mu_b);
        p.sigma = rng.uniform(prior.sigma_a, prior.sigma_b);
        out[l] = p;
    }
    return out;
}

GaussianDraw sample_params_gaussian(const GaussianPriorSet& priors, std::optional<std::size_t> k, RandomStream& rng) {
    if (priors.sequences.empty()) throw UsageError("gaussian prior set has no sequences");
    GaussianDraw draw;
    if (k) {
        if (*k >= priors.sequences.size()) throw UsageError("sequence index out of range");
        draw.sequence = *k;
    } else {
        draw.sequence = rng.index(priors.sequences.size());
    }
    for (const auto& [l, p] : priors.sequences[draw.sequence].labels) {
        GaussianParams g;
        g.mu = rng.normal(p.mu_mu, p.sigma_mu);
        g.sigma = std::max(0.0, rng.normal(p.mu_sigma, p.sigma_sigma));
        draw.params[l] = g;
    }
    return draw;
}

IntensityVolume synthesize(const LabelVolume& s, const LabelParams& params, RandomStream& rng) {
    const std::vector<Label>& present = s.label_set();
    const Label max_label = present.empty() ? 0 : present.back();
    std::vector<double> mu(max_label + 1, 0.0), sigma(max_label + 1, 0.0);
    for (const Label l : present) {
        const auto it = params.find(l);
        if (it == params.end()) throw CoverageError("no intensity parameters for label " + std::to_string(l));
        if (!(it->second.sigma >= 0.0)) throw UsageError("negative sigma for label " + std::to_string(l));
        mu[l] = it->second.mu;
        sigma[l] = it->second.sigma;
    }

    const std::uint64_t base = rng.next_u64();
    std::vector<float> out(s.size());
    const std::span<const Label> labels = s.data();
    for (std::size_t start = 0, chunk = 0; start < out.size(); start += kSynthChunk, ++chunk) {
        RandomStream sub(combine64(base, chunk));
        std::normal_distribution<double> unit(0.0, 1.0);
        const std::size_t end = std::min(out.size(), start + kSynthChunk);
        for (std::size_t n = start; n < end; ++n) {
            const Label l = labels[n];
            out[n] = static_cast<float>(mu[l] + sigma[l] * unit(sub.engine()));
        }
    }
    return IntensityVolume(s.meta(), std::move(out));
}

GaussianPriorSet estimate_priors(std::span<const SequenceSamples> sequences) {
    if (sequences.empty()) throw UsageError("estimate_priors needs at least one sequence");

    // per sequence, per label: region means and stds across images
    struct Stats {
        std::vector<double> means;
        std::vector<double> stds;
    };
    std::vector<std::map<Label, Stats>> per_seq(sequences.size());
    std::set<Label> universe;

    for (std::size_t q = 0; q < sequences.size(); ++q) {
        const SequenceSamples& seq = sequences[q];
        if (seq.pairs.empty()) throw UsageError("sequence '" + seq.name + "' has no images");
        for (const ImageSegPair& pair : seq.pairs) {
            if (!pair.image.meta().same_grid(pair.seg.meta(), 1e-4)) {
                throw UsageError("sequence '" + seq.name + "': image and segmentation grids differ");
            }
            const std::size_t nl = static_cast<std::size_t>(pair.seg.label_set().back()) + 1;
            std::vector<double> sum(nl, 0.0), sq(nl, 0.0), cnt(nl, 0.0);
            for (std::size_t n = 0; n < pair.seg.size(); ++n) {
                const Label l = pair.seg[n];
                sum[l] += pair.image[n];
                cnt[l] += 1.0;
            }
            for (std::size_t n = 0; n < pair.seg.size(); ++n) {
                const Label l = pair.seg[n];
                const double d = pair.image[n] - sum[l] / cnt[l];
                sq[l] += d * d;
            }
            for (const Label l : pair.seg.label_set()) {
                Stats& st = per_seq[q][l];
                st.means.push_back(sum[l] / cnt[l]);
                st.stds.push_back(std::sqrt(sq[l] / cnt[l]));
                universe.insert(l);
            }
        }
    }

    GaussianPriorSet out;
    for (std::size_t q = 0; q < sequences.size(); ++q) {
        SequencePrior sp;
        sp.name = sequences[q].name;
        for (const Label l : universe) {
            const auto it = per_seq[q].find(l);
            if (it == per_seq[q].end()) {
                throw CoverageError("label " + std::to_string(l) + " is absent from every image of sequence '" + sp.name + "'");
            }
            const Stats& st = it->second;
            LabelPrior p;
            p.mu_mu = mean_of(st.means);
            p.mu_sigma = mean_of(st.stds);
            if (st.means.size() >= 2) {
                p.sigma_mu = sample_std_of(st.means);
                p.sigma_sigma = sample_std_of(st.stds);
            } else {
                p.sigma_mu = kSingleSampleSpread;
                p.sigma_sigma = kSingleSampleSpread;
            }
            sp.labels[l] = p;
        }
        out.sequences.push_back(std::move(sp));
    }
    return out;
}

std::string priors_to_json(const GaussianPriorSet& priors) {
    nlohmann::json seqs = nlohmann::json::array();
    for (const auto& seq : priors.sequences) {
        nlohmann::json labels = nlohmann::json::object();
        for (const auto& [l, p] : seq.labels) {
            labels[std::to_string(l)] = {p.mu_mu, p.sigma_mu, p.mu_sigma, p.sigma_sigma};
        }
        seqs.push_back({{"name", seq.name}, {"labels", labels}});
    }
    return nlohmann::json{{"sequences", seqs}}.dump(2);
}

GaussianPriorSet priors_from_json(const std::string& text) {
    GaussianPriorSet out;
    try {
        const nlohmann::json doc = nlohmann::json::parse(text);
        for (const auto& seq : doc.at("sequences")) {
            SequencePrior sp;
            sp.name = seq.at("name").get<std::string>();
            for (const auto& [key, arr] : seq.at("labels").items()) {
                std::size_t used = 0;
                const unsigned long id = std::stoul(key, &used);
                if (used != key.size() || id > 65535) throw ConfigError("invalid label id '" + key + "'");
                if (!arr.is_array() || arr.size() != 4) throw ConfigError("label " + key + " needs four hyper-parameters");
                sp.labels[static_cast<Label>(id)] = LabelPrior{arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(), arr[3].get<double>()};
            }
            out.sequences.push_back(std::move(sp));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed prior file: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ConfigError("malformed prior file: non-numeric label id");
    } catch (const std::out_of_range&) {
        throw ConfigError("malformed prior file: label id out of range");
    }
    try {
        out.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid prior file: ") + e.what());
    }
    return out;
}

GaussianPriorSet load_priors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read prior file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return priors_from_json(ss.str());
}

void save_priors(const GaussianPriorSet& priors, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << priors_to_json(priors) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace synthba
