#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "factts/errors.hpp"
#include "factts/metrics.hpp"
#include "testutil.hpp"

using namespace factts;

TEST_CASE("duration rmse") {
    CHECK(duration_rmse(Vector{10, 20, 30}, Vector{10, 20, 30}) == 0.0);
    CHECK(duration_rmse(Vector{10, 20}, Vector{14, 22}, 5.0) ==
          doctest::Approx(std::sqrt(10.0) * 5.0).epsilon(1e-12));
    CHECK(duration_rmse(Vector{7}, Vector{8}, 5.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK_THROWS_AS(duration_rmse(Vector{}, Vector{}), EmptyInput);
    CHECK_THROWS_AS(duration_rmse(Vector{1}, Vector{1, 2}), ShapeError);
}

TEST_CASE("log-F0 metrics on jointly voiced frames") {
    const Vector voiced{1, 1, 1, 1, 1};
    const Vector x{4.0, 4.5, 5.0, 4.8, 4.2};

    const LogF0Metrics same = logf0_metrics(x, x, voiced, voiced);
    CHECK(same.rmse == 0.0);
    CHECK(same.correlation == 1.0);
    CHECK(same.voiced_frames == 5);

    Vector shifted = x;
    for (double& v : shifted) v += 0.25;
    const LogF0Metrics off = logf0_metrics(x, shifted, voiced, voiced);
    CHECK(off.rmse == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(off.correlation == doctest::Approx(1.0).epsilon(1e-12));

    // deviations negated about a shared mean
    const Vector mean_dev{1.0, -2.0, 0.5, 0.5};
    Vector up(4), down(4);
    for (std::size_t i = 0; i < 4; ++i) {
        up[i] = 5.0 + mean_dev[i];
        down[i] = 5.0 - mean_dev[i];
    }
    const Vector v4{1, 1, 1, 1};
    CHECK(logf0_metrics(up, down, v4, v4).correlation == -1.0);
}

TEST_CASE("log-F0 masking and error paths") {
    const Vector x{4.0, 4.5, 5.0, 4.8};
    // only frames 1 and 3 are jointly voiced
    const Vector pv{0.0, 1.0, 0.2, 0.9};
    const Vector tv{1.0, 0.8, 0.4, 1.0};
    const LogF0Metrics m = logf0_metrics(x, x, pv, tv);
    CHECK(m.voiced_frames == 2);

    const Vector one_joint{0.0, 1.0, 0.0, 0.0};
    CHECK_THROWS_AS(logf0_metrics(x, x, one_joint, one_joint), InsufficientVoicedFrames);

    const Vector flat{3.0, 3.0, 3.0, 3.0};
    const Vector v4{1, 1, 1, 1};
    CHECK_THROWS_AS(logf0_metrics(flat, x, v4, v4), DegenerateVariance);
}

TEST_CASE("mel-cepstral distortion") {
    Matrix a(2, 3), b(2, 3);
    Rng rng(12);
    for (double& v : a.data) v = rng.uniform(-1.0, 1.0);
    b.data = a.data;
    CHECK(mcd(a, b) == 0.0);

    Matrix p(1, 1), q(1, 1);
    p.at(0, 0) = 0.0;
    q.at(0, 0) = 0.7;
    CHECK(mcd(p, q) ==
          doctest::Approx((10.0 / std::log(10.0)) * std::sqrt(2.0) * 0.7).epsilon(1e-12));

    // per-frame averaging: two frames with distortions d1 and d2
    Matrix x(2, 1), y(2, 1);
    x.at(0, 0) = 0.0;
    x.at(1, 0) = 0.0;
    y.at(0, 0) = 0.3;
    y.at(1, 0) = 0.9;
    const double d1 = (10.0 / std::log(10.0)) * std::sqrt(2.0) * 0.3;
    const double d2 = (10.0 / std::log(10.0)) * std::sqrt(2.0) * 0.9;
    CHECK(mcd(x, y) == doctest::Approx((d1 + d2) / 2.0).epsilon(1e-12));

    Matrix wrong(3, 1);
    CHECK_THROWS_AS(mcd(x, wrong), ShapeError);
}

TEST_CASE("mcd detects any translation") {
    Rng rng(9);
    Matrix x(6, 4);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    for (double delta : {1e-9, 0.01, -0.5}) {
        Matrix y = x;
        for (double& v : y.data) v += delta;
        CHECK(mcd(x, y) > 0.0);
    }
}

TEST_CASE("voiced/unvoiced error rate") {
    const Vector a{0.9, 0.1, 0.8, 0.0};
    CHECK(vuv_error_rate(a, a) == 0.0);
    const Vector b{0.1, 0.9, 0.2, 1.0};
    CHECK(vuv_error_rate(a, b) == 1.0);
    const Vector c{0.9, 0.1, 0.2, 1.0};
    CHECK(vuv_error_rate(a, c) == 0.5);
    CHECK_THROWS_AS(vuv_error_rate(Vector{}, Vector{}), EmptyInput);
}

TEST_CASE("metrics are symmetric in (pred, target)") {
    Rng rng(44);
    const Vector p = testutil::random_vector(rng, 20, 2.0, 6.0);
    const Vector t = testutil::random_vector(rng, 20, 2.0, 6.0);
    const Vector voiced(20, 1.0);
    CHECK(duration_rmse(p, t) == duration_rmse(t, p));
    const LogF0Metrics ab = logf0_metrics(p, t, voiced, voiced);
    const LogF0Metrics ba = logf0_metrics(t, p, voiced, voiced);
    CHECK(ab.rmse == ba.rmse);
    CHECK(ab.correlation == doctest::Approx(ba.correlation).epsilon(1e-14));

    Matrix mp(4, 5), mt(4, 5);
    for (double& v : mp.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : mt.data) v = rng.uniform(-1.0, 1.0);
    CHECK(mcd(mp, mt) == mcd(mt, mp));

    const Vector fp = testutil::random_vector(rng, 30, 0.0, 1.0);
    const Vector ft = testutil::random_vector(rng, 30, 0.0, 1.0);
    CHECK(vuv_error_rate(fp, ft) == vuv_error_rate(ft, fp));
}

TEST_CASE("weighted mean aggregation") {
    WeightedMean m;
    CHECK(m.empty());
    CHECK_THROWS_AS(m.value(), EmptyInput);
    m.add(1.0, 10.0);
    m.add(4.0, 30.0);
    CHECK(m.value() == doctest::Approx((1.0 * 10 + 4.0 * 30) / 40.0).epsilon(1e-15));
}

TEST_CASE("metric report CSV round-trips") {
    MetricReport report;
    report.rows.push_back({"pm", 2, "e1", "open", "logf0_corr", 0.87345, 412});
    report.rows.push_back({"sed", 2, "e1", "sed", "mcd_db", 3.25, 400});
    const std::string path = "test_metrics_report.csv";
    write_metric_csv(report, path);
    const MetricReport loaded = read_metric_csv(path);
    REQUIRE(loaded.rows.size() == 2);
    CHECK(loaded.rows[0].model == "pm");
    CHECK(loaded.rows[0].speaker == 2);
    CHECK(loaded.rows[0].emotion == "e1");
    CHECK(loaded.rows[0].test_kind == "open");
    CHECK(loaded.rows[0].metric == "logf0_corr");
    CHECK(loaded.rows[0].value == 0.87345);
    CHECK(loaded.rows[0].n_frames == 412);
    CHECK(loaded.rows[1].model == "sed");

    std::ofstream bad("test_metrics_bad.csv");
    bad << "something,else\n";
    bad.close();
    CHECK_THROWS_AS(read_metric_csv("test_metrics_bad.csv"), ReportError);
    std::filesystem::remove(path);
    std::filesystem::remove("test_metrics_bad.csv");
}
