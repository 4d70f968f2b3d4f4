#include "synthba/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "synthba/errors.hpp"

namespace synthba {

void PredictionRecord::validate() const {
    if (!(y_true > 0.0) || !std::isfinite(y_true)) throw DomainError("record '" + subject_id + "': y_true must be > 0");
    if (!std::isfinite(y_pred)) throw DomainError("record '" + subject_id + "': y_pred must be finite");
    if (score && !std::isfinite(*score)) throw DomainError("record '" + subject_id + "': score must be finite");
}

MaeResult mae(std::span<const PredictionRecord> records) {
    if (records.empty()) throw UsageError("mae needs at least one record");
    double sum = 0.0;
    for (const auto& r : records) sum += std::abs(r.y_true - r.y_pred);
    const double n = static_cast<double>(records.size());
    const double m = sum / n;
    double ss = 0.0;
    for (const auto& r : records) {
        const double d = std::abs(r.y_true - r.y_pred) - m;
        ss += d * d;
    }
    return {m, std::sqrt(ss / n)};
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw UsageError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // the continued fraction converges fast for x < (a + 1) / (a + b + 2)
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double f = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        f *= d * c;

        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::exp(log_front) * f / a;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw UsageError("degrees of freedom must be > 0");
    if (std::isinf(t)) return 0.0;
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("pearson needs paired samples");
    const std::size_t n = x.size();
    if (n < 3) throw UsageError("pearson needs at least 3 samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedCorrelationError("correlation undefined: a variable has zero variance");

    Correlation out;
    out.n = n;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n) - 2.0;
    if (std::abs(out.r) >= 1.0) {
        out.p = 0.0;
    } else {
        const double t = out.r * std::sqrt(df / (1.0 - out.r * out.r));
        out.p = student_t_two_sided_p(t, df);
    }
    return out;
}

Correlation pearson(std::span<const PredictionRecord> records) {
    std::vector<double> pad, score;
    for (const auto& r : records) {
        if (!r.score) continue;
        pad.push_back(brain_pad(r));
        score.push_back(*r.score);
    }
    return pearson(pad, score);
}

Aggregate aggregate(std::span<const TestSetResult> results, std::span<const std::string> subset) {
    if (subset.empty()) throw UsageError("aggregate needs a non-empty subset");
    std::vector<double> maes;
    for (const std::string& name : subset) {
        const auto it = std::find_if(results.begin(), results.end(), [&](const TestSetResult& r) { return r.name == name; });
        if (it == results.end()) throw UsageError("unknown test set '" + name + "'");
        maes.push_back(it->mae);
    }
    Aggregate out;
    out.n_sets = maes.size();
    double sum = 0.0;
    for (const double m : maes) sum += m;
    out.avg_mae = sum / static_cast<double>(maes.size());
    if (maes.size() == 1) {
        out.degenerate = true;
        return out;
    }
    double ss = 0.0;
    for (const double m : maes) ss += (m - out.avg_mae) * (m - out.avg_mae);
    out.across_set_std = std::sqrt(ss / static_cast<double>(maes.size() - 1));
    return out;
}

std::vector<TestSetResult> per_set_results(std::span<const PredictionRecord> records) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<PredictionRecord>> groups;
    for (const auto& r : records) {
        const std::string name = r.set.empty() ? "all" : r.set;
        if (!groups.contains(name)) order.push_back(name);
        groups[name].push_back(r);
    }
    std::vector<TestSetResult> out;
    for (const auto& name : order) {
        const auto& g = groups[name];
        const MaeResult m = mae(g);
        out.push_back({name, m.mae, m.mae_std, g.size()});
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::vector<PredictionRecord> read_predictions(std::istream& in, const std::string& score_col, const std::string& set_col) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("predictions CSV is empty");
    const auto header = split_csv_line(line);
    auto col = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto c_id = col("subject_id"), c_true = col("y_true"), c_pred = col("y_pred");
    if (!c_id || !c_true || !c_pred) throw DomainError("predictions CSV needs subject_id, y_true and y_pred columns");
    const auto c_score = score_col.empty() ? std::nullopt : col(score_col);
    std::optional<std::size_t> c_set;
    if (!set_col.empty()) {
        c_set = col(set_col);
        if (!c_set) throw UsageError("predictions CSV has no column '" + set_col + "'");
    }

    std::vector<PredictionRecord> out;
    std::size_t line_no = 1;
    auto number = [&](const std::string& s, const char* what) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw DomainError("line " + std::to_string(line_no) + ": invalid " + what + " '" + s + "'");
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() < header.size()) throw DomainError("line " + std::to_string(line_no) + ": too few fields");
        PredictionRecord r;
        r.subject_id = f[*c_id];
        r.y_true = number(f[*c_true], "y_true");
        r.y_pred = number(f[*c_pred], "y_pred");
        if (c_score && !f[*c_score].empty()) r.score = number(f[*c_score], "score");
        if (c_set) r.set = f[*c_set];
        r.validate();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path, const std::string& score_col,
                                               const std::string& set_col) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return read_predictions(in, score_col, set_col);
}

std::string eval_report_json(std::span<const PredictionRecord> records, const std::map<std::string, std::vector<std::string>>& subsets) {
    using nlohmann::json;
    const auto sets = per_set_results(records);
    json doc;
    doc["sets"] = json::array();
    std::vector<std::string> all_names;
    for (const auto& s : sets) {
        doc["sets"].push_back({{"name", s.name}, {"mae", s.mae}, {"mae_std", s.mae_std}, {"n", s.n}});
        all_names.push_back(s.name);
    }
    auto agg_json = [&](const std::vector<std::string>& names) {
        const Aggregate a = aggregate(sets, names);
        return json{{"sets", names}, {"avg_mae", a.avg_mae}, {"std", a.across_set_std}, {"n_sets", a.n_sets}, {"degenerate", a.degenerate}};
    };
    doc["averages"] = json::object();
    doc["averages"]["AVG-ALL"] = agg_json(all_names);
    for (const auto& [name, members] : subsets) doc["averages"][name] = agg_json(members);

    std::size_t scored = 0;
    for (const auto& r : records) scored += r.score ? 1 : 0;
    if (scored >= 3) {
        const Correlation c = pearson(records);
        doc["correlation"] = {{"r", c.r}, {"p", c.p}, {"n", c.n}};
    }
    return doc.dump(2);
}

} // namespace synthba
