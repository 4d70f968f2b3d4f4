#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"

#include "synthba/errors.hpp"
#include "synthba/metrics.hpp"

using namespace synthba;

namespace {

// Single-pass raw-moment formula in extended precision; shares no code
// path with the library's centered two-pass sums.
long double oracle_r(const std::vector<double>& x, const std::vector<double>& y) {
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    const long double n = static_cast<long double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        syy += static_cast<long double>(y[i]) * y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

double oracle_p(double r, std::size_t n) {
    const double df = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::vector<PredictionRecord> from_errors(const std::vector<double>& errors) {
    std::vector<PredictionRecord> out;
    for (std::size_t i = 0; i < errors.size(); ++i) out.push_back({"s" + std::to_string(i), 50.0, 50.0 + errors[i], std::nullopt, ""});
    return out;
}

} // namespace

TEST_CASE("mae examples") {
    const auto perfect = from_errors({0.0, 0.0, 0.0});
    CHECK(mae(perfect).mae == 0.0);
    CHECK(mae(perfect).mae_std == 0.0);

    const auto two = from_errors({1.0, -3.0});
    CHECK(mae(two).mae == 2.0);
    CHECK(mae(two).mae_std == 1.0);

    CHECK_THROWS_AS(mae(std::vector<PredictionRecord>{}), UsageError);
}

TEST_CASE("brain PAD is signed") {
    CHECK(brain_pad({"a", 70.0, 80.0, std::nullopt, ""}) == 10.0);
    CHECK(brain_pad({"a", 70.0, 70.0, std::nullopt, ""}) == 0.0);
    CHECK(brain_pad({"a", 70.0, 60.0, std::nullopt, ""}) == -10.0);
}

TEST_CASE("shifting predictions shifts PAD and MAE by the offset") {
    std::vector<PredictionRecord> recs;
    for (int i = 0; i < 20; ++i) recs.push_back({"s", 20.0 + i, 20.0 + i, std::nullopt, ""});
    for (const double c : {-3.5, 0.25, 7.0}) {
        auto shifted = recs;
        double pad = 0.0;
        for (auto& r : shifted) {
            r.y_pred += c;
            pad += brain_pad(r);
        }
        CHECK(pad / 20.0 == doctest::Approx(c).epsilon(1e-12));
        CHECK(mae(shifted).mae == doctest::Approx(std::abs(c)).epsilon(1e-12));
    }
}

TEST_CASE("mae matches a brute-force recomputation on random tables") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> age(6.0, 95.0), err(-15.0, 15.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 100;
        std::vector<PredictionRecord> recs;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = age(rng);
            recs.push_back({"s", y, y + err(rng), std::nullopt, ""});
        }
        long double s = 0, ss = 0;
        for (const auto& r : recs) {
            const long double a = std::abs(static_cast<long double>(r.y_true) - r.y_pred);
            s += a;
            ss += a * a;
        }
        const long double m = s / n;
        const long double sd = std::sqrt(std::max<long double>(0, ss / n - m * m));
        const auto got = mae(recs);
        CHECK(std::abs(got.mae - static_cast<double>(m)) <= 1e-10);
        CHECK(std::abs(got.mae_std - static_cast<double>(sd)) <= 1e-10);
    }
}

TEST_CASE("pearson perfect and anti correlation") {
    std::vector<PredictionRecord> recs;
    for (int i = 0; i < 10; ++i) {
        PredictionRecord r{"s", 40.0 + i, 40.0 + i + (i % 3) * 1.5, std::nullopt, ""};
        r.score = brain_pad(r);
        recs.push_back(r);
    }
    const auto pos = pearson(recs);
    CHECK(pos.r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pos.p < 1e-12);
    CHECK(pos.n == 10);
    for (auto& r : recs) r.score = -brain_pad(r);
    CHECK(pearson(recs).r == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson errors") {
    const std::vector<double> x{1.0, 2.0, 3.0}, flat{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(pearson(x, flat), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson(flat, x), UndefinedCorrelationError);
    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(pearson(two, two), UsageError);
}

TEST_CASE("pearson on a fixed 20-row table") {
    const std::vector<double> x{1.2, -0.4, 3.3, 2.1, 0.0, -1.7, 4.4, 2.8, -0.9, 1.1,
                                0.6, 3.9, -2.2, 1.8, 2.4, -0.3, 0.9, 3.1, -1.1, 2.7};
    const std::vector<double> y{2.0, 1.1, 3.0, 2.9, 0.4, -0.8, 3.5, 1.9, 0.3, 2.2,
                                0.1, 4.8, -1.0, 1.0, 3.3, 0.2, 1.7, 2.5, -2.1, 1.8};
    const auto c = pearson(x, y);
    const long double r = oracle_r(x, y);
    CHECK(std::abs(c.r - static_cast<double>(r)) <= 1e-10);
    CHECK(std::abs(c.p - oracle_p(static_cast<double>(r), 20)) <= 1e-8);
}

TEST_CASE("pearson matches the oracles on 1,000 random tables") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst_r = 0.0, worst_p = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 3 + rng() % 200;
        const double slope = noise(rng) * 0.3;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = 10.0 * noise(rng) + 5.0;
            y[i] = slope * x[i] + 3.0 * noise(rng) + 30.0;
        }
        const auto c = pearson(x, y);
        const double r = static_cast<double>(oracle_r(x, y));
        worst_r = std::max(worst_r, std::abs(c.r - r));
        worst_p = std::max(worst_p, std::abs(c.p - oracle_p(r, n)));
    }
    CHECK(worst_r <= 1e-10);
    CHECK(worst_p <= 1e-8);
}

TEST_CASE("pearson is invariant under positive affine maps") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(30), y(30);
        for (int i = 0; i < 30; ++i) {
            x[i] = u(rng);
            y[i] = x[i] * 0.5 + u(rng);
        }
        const double a = std::exp(u(rng) / 2.0), b = u(rng) * 10.0;
        std::vector<double> ax(30);
        for (int i = 0; i < 30; ++i) ax[i] = a * x[i] + b;
        CHECK(std::abs(pearson(ax, y).r - pearson(x, y).r) <= 1e-12);
        CHECK(std::abs(pearson(x, ax).r - 1.0) <= 1e-12);
    }
}

TEST_CASE("incomplete beta and t tail match Boost") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ab(0.05, 60.0), xx(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double a = ab(rng), b = ab(rng), x = xx(rng);
        CHECK(std::abs(regularized_incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-10);
    }
    for (const double df : {1.0, 2.0, 5.0, 17.0, 198.0, 5000.0}) {
        const boost::math::students_t dist(df);
        for (const double t : {0.0, 0.1, 1.0, 2.5, -3.7, 12.0}) {
            const double expected = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
            CHECK(std::abs(student_t_two_sided_p(t, df) - expected) <= 1e-10);
        }
    }
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("aggregate reproduces the published table averages") {
    const std::vector<TestSetResult> sets{{"A", 3.8, 0.0, 1}, {"B", 5.1, 0.0, 1}, {"C", 4.5, 0.0, 1}, {"D", 5.2, 0.0, 1}, {"E", 5.0, 0.0, 1}};
    const std::vector<std::string> all{"A", "B", "C", "D", "E"}, ext{"C", "D", "E"};
    const auto a = aggregate(sets, all);
    CHECK(a.avg_mae == doctest::Approx(4.72).epsilon(1e-12));
    CHECK(std::abs(a.across_set_std - 0.61) <= 0.1);
    CHECK(std::abs(a.across_set_std - 0.58052) <= 1e-4);
    const auto e = aggregate(sets, ext);
    CHECK(e.avg_mae == doctest::Approx(4.9).epsilon(1e-12));
    CHECK(std::abs(e.across_set_std - 0.40) <= 0.1);
    CHECK(e.n_sets == 3);
    CHECK_FALSE(e.degenerate);
}

TEST_CASE("aggregate edge cases") {
    const std::vector<TestSetResult> sets{{"A", 3.8, 1.0, 10}};
    const std::vector<std::string> one{"A"}, missing{"Z"};
    const auto a = aggregate(sets, one);
    CHECK(a.avg_mae == 3.8);
    CHECK(a.across_set_std == 0.0);
    CHECK(a.degenerate);
    CHECK_THROWS_AS(aggregate(sets, missing), UsageError);
    CHECK_THROWS_AS(aggregate(sets, std::vector<std::string>{}), UsageError);
}

TEST_CASE("predictions CSV parsing") {
    std::istringstream in("subject_id,y_true,y_pred,score,cohort\n"
                          "\"a,1\",70,72.5,3,ADNI\n"
                          "b,30,28,,IXI\r\n"
                          "\n"
                          "c,45.5,50,1.25,ADNI\n");
    const auto recs = read_predictions(in, "score", "cohort");
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].subject_id == "a,1");
    CHECK(recs[0].score == 3.0);
    CHECK_FALSE(recs[1].score.has_value());
    CHECK(recs[1].set == "IXI");
    const auto sets = per_set_results(recs);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].name == "ADNI");
    CHECK(sets[0].n == 2);
    CHECK(sets[0].mae == doctest::Approx(3.5));

    std::istringstream bad_header("id,y_true,y_pred\n");
    CHECK_THROWS_AS(read_predictions(bad_header), DomainError);
    std::istringstream bad_value("subject_id,y_true,y_pred\na,x,3\n");
    CHECK_THROWS_AS(read_predictions(bad_value), DomainError);
    std::istringstream bad_age("subject_id,y_true,y_pred\na,0,3\n");
    CHECK_THROWS_AS(read_predictions(bad_age), DomainError);
    std::istringstream no_set("subject_id,y_true,y_pred\na,1,3\n");
    CHECK_THROWS_AS(read_predictions(no_set, "score", "cohort"), UsageError);
    CHECK_THROWS_AS(read_predictions(std::filesystem::path("/nonexistent.csv")), IoError);
}

TEST_CASE("eval report JSON") {
    std::vector<PredictionRecord> recs;
    const double errs[] = {1.0, -2.0, 3.0, 0.5, -0.5, 4.0};
    for (int i = 0; i < 6; ++i) {
        PredictionRecord r{"s" + std::to_string(i), 60.0 + i, 60.0 + i + errs[i], 10.0 + i * i, i < 3 ? "in" : "ext"};
        recs.push_back(r);
    }
    const std::string json = eval_report_json(recs, {{"AVG-EXT", {"ext"}}});
    CHECK(json.find("\"AVG-ALL\"") != std::string::npos);
    CHECK(json.find("\"AVG-EXT\"") != std::string::npos);
    CHECK(json.find("\"correlation\"") != std::string::npos);

    for (auto& r : recs) r.score.reset();
    CHECK(eval_report_json(recs).find("\"correlation\"") == std::string::npos);
    CHECK_THROWS_AS(eval_report_json(recs, {{"X", {"nope"}}}), UsageError);
}

TEST_CASE("split_csv_line") {
    CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split_csv_line("\"x \"\"y\"\"\",z") == std::vector<std::string>{"x \"y\"", "z"});
}
