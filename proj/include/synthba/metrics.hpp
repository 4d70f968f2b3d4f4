#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synthba {

struct PredictionRecord {
    std::string subject_id;
    double y_true = 0.0; // chronological age, years
    double y_pred = 0.0; // predicted brain age, years
    std::optional<double> score;
    std::string set; // test-set name; empty when not grouped

    void validate() const;
};

struct MaeResult {
    double mae = 0.0;
    double mae_std = 0.0; // population std of the absolute errors
};

/// Mean and population std of |y_true - y_pred|.
MaeResult mae(std::span<const PredictionRecord> records);

/// Predicted age difference, y_pred - y_true.
inline double brain_pad(const PredictionRecord& r) { return r.y_pred - r.y_true; }

struct Correlation {
    double r = 0.0;
    double p = 1.0; // two-sided
    std::size_t n = 0;
};

/// Sample Pearson r with a two-sided p-value from Student's t on n - 2
/// degrees of freedom. |r| = 1 reports p = 0.
Correlation pearson(std::span<const double> x, std::span<const double> y);
/// Correlation of brain PAD with the score, over records that have a score.
Correlation pearson(std::span<const PredictionRecord> records);

/// I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
/// P(|T| >= |t|) for T ~ Student-t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct TestSetResult {
    std::string name;
    double mae = 0.0;
    double mae_std = 0.0;
    std::size_t n = 0;
};

struct Aggregate {
    double avg_mae = 0.0;
    double across_set_std = 0.0; // sample std (n - 1) over the selected sets
    std::size_t n_sets = 0;
    bool degenerate = false;     // a single set; std reported as 0
};

/// Mean of the per-set MAEs named in `subset`.
Aggregate aggregate(std::span<const TestSetResult> results, std::span<const std::string> subset);

/// Per-set MAE in order of first appearance of each set name.
std::vector<TestSetResult> per_set_results(std::span<const PredictionRecord> records);

/// CSV with a header naming at least subject_id, y_true and y_pred.
/// `score_col` and `set_col` name optional extra columns.
std::vector<PredictionRecord> read_predictions(std::istream& in, const std::string& score_col = "score",
                                               const std::string& set_col = "");
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path, const std::string& score_col = "score",
                                               const std::string& set_col = "");

/// JSON report: per-set results, AVG-ALL, the named subset averages and,
/// when at least three records carry a score, the correlation block.
std::string eval_report_json(std::span<const PredictionRecord> records,
                             const std::map<std::string, std::vector<std::string>>& subsets = {});

/// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace synthba
