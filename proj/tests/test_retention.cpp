#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "uqeval/retention.hpp"
#include "uqeval/rng.hpp"

using namespace uqeval;

namespace {

Volume3D row(const std::vector<float>& data) {
    return Volume3D(Shape{1, 1, data.size()}, VolumeKind::binary, data);
}

LesionClassification classification_from(const std::vector<int>& is_tp, std::size_t fn) {
    LesionClassification cls;
    for (std::size_t i = 0; i < is_tp.size(); ++i) {
        cls.predicted.push_back({static_cast<std::int32_t>(i + 1), 1,
                                 is_tp[i] ? LesionStatus::tp : LesionStatus::fp,
                                 is_tp[i] ? 1.0 : 0.0});
    }
    cls.fn_count = fn;
    return cls;
}

} // namespace

TEST_CASE("dsc") {
    const Volume3D a = row({1, 1, 0, 0});
    const Volume3D b = row({1, 0, 1, 0});
    CHECK(dsc(a, a) == 1.0);
    CHECK(dsc(a, b) == 0.5);
    CHECK(dsc(row({0, 0}), row({0, 0})) == 1.0);
    CHECK_THROWS_AS(dsc(a, row({0, 0})), ValidationError);

    // masked variant ignores out-of-mask voxels
    const Volume3D mask(Shape{1, 1, 4}, VolumeKind::binary, {1, 1, 0, 0});
    CHECK(dsc(a, b, mask) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("lesion_f1") {
    CHECK(lesion_f1(2, 1, 1) == doctest::Approx(4.0 / 6.0));
    CHECK(lesion_f1(0, 3, 0) == 0.0);
    CHECK(lesion_f1(0, 0, 0) == 1.0);
}

TEST_CASE("worked DSC retention curve") {
    const Volume3D pred = row({1, 0, 1, 0});
    const Volume3D truth = row({1, 1, 0, 0});
    const Volume3D mask = Volume3D::ones(Shape{1, 1, 4}, VolumeKind::binary);
    const std::vector<double> u = {0.1, 0.9, 0.8, 0.2};

    const RetentionCurve curve = dsc_retention_curve(pred, truth, mask, u, 0.25);
    REQUIRE(curve.fractions == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
    CHECK(curve.values == std::vector<double>{0.5, 0.8, 1.0, 1.0, 1.0});
    CHECK(curve.auc == 0.8875); // frozen from the enumeration oracle

    const RetentionCurve brute =
        oracles::brute_dsc_rc({1, 0, 1, 0}, {1, 1, 0, 0}, {1, 1, 1, 1}, u, 0.25);
    CHECK(curve.values == brute.values);
    CHECK(curve.auc == brute.auc);
}

TEST_CASE("DSC retention curve edge behavior") {
    const Shape shape{1, 1, 6};
    const Volume3D mask = Volume3D::ones(shape, VolumeKind::binary);
    const Volume3D truth(shape, VolumeKind::binary, {1, 1, 0, 0, 1, 0});

    SUBCASE("perfect prediction stays at 1") {
        const RetentionCurve curve = dsc_retention_curve(
            truth, truth, mask, std::vector<double>(6, 0.3), 0.25);
        for (double v : curve.values) CHECK(v == 1.0);
        CHECK(curve.auc == 1.0);
    }
    SUBCASE("ideal map reaches 1 once every error is replaced") {
        const Volume3D pred(shape, VolumeKind::binary, {1, 0, 0, 1, 1, 0});
        std::vector<double> ideal(6, 0.0);
        std::size_t errors = 0;
        for (std::size_t i = 0; i < 6; ++i) {
            if (pred[i] != truth[i]) {
                ideal[i] = 1.0;
                ++errors;
            }
        }
        const double tau = 1.0 / 6.0;
        const RetentionCurve curve = dsc_retention_curve(pred, truth, mask, ideal, tau);
        for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
            if (static_cast<double>(i) >= static_cast<double>(errors)) {
                CHECK(curve.values[i] == 1.0);
            }
        }
    }
    SUBCASE("empty brain mask yields a constant degenerate curve") {
        const Volume3D none = Volume3D::zeros(shape, VolumeKind::binary);
        const RetentionCurve curve = dsc_retention_curve(
            truth, truth, none, std::vector<double>(6, 0.5), 0.25);
        for (double v : curve.values) CHECK(v == 1.0);
        CHECK(curve.fractions.front() == 1.0);
        CHECK(curve.fractions.back() == 0.0);
    }
    SUBCASE("tau out of range") {
        CHECK_THROWS_AS(dsc_retention_curve(truth, truth, mask, std::vector<double>(6, 0.0), 0.0),
                        ValidationError);
        CHECK_THROWS_AS(dsc_retention_curve(truth, truth, mask, std::vector<double>(6, 0.0), 1.5),
                        ValidationError);
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(dsc_retention_curve(truth, truth, mask, std::vector<double>(5, 0.0), 0.5),
                        ValidationError);
    }
}

TEST_CASE("DSC retention curve matches the brute-force oracle") {
    rng::Stream stream(11);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(stream.bounded(20));
        std::vector<float> pred(n), truth(n), mask(n);
        std::vector<int> predi(n), truthi(n), maski(n);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) {
            predi[i] = stream.uniform01() < 0.5;
            truthi[i] = stream.uniform01() < 0.5;
            maski[i] = stream.uniform01() < 0.85;
            pred[i] = static_cast<float>(predi[i]);
            truth[i] = static_cast<float>(truthi[i]);
            mask[i] = static_cast<float>(maski[i]);
            u[i] = 0.01 + 0.99 * stream.uniform01();
        }
        const double tau = 0.05 + 0.3 * stream.uniform01();
        const Shape shape{1, 1, n};
        const RetentionCurve curve = dsc_retention_curve(
            Volume3D(shape, VolumeKind::binary, pred), Volume3D(shape, VolumeKind::binary, truth),
            Volume3D(shape, VolumeKind::binary, mask), u, tau);
        const RetentionCurve brute = oracles::brute_dsc_rc(predi, truthi, maski, u, tau);
        REQUIRE(curve.fractions == brute.fractions);
        REQUIRE(curve.values == brute.values);
        REQUIRE(curve.auc == std::clamp(brute.auc, 0.0, 1.0));
    }
}

TEST_CASE("worked F1 retention curve") {
    const LesionClassification cls = classification_from({1, 0}, 1);
    const RetentionCurve curve = f1_retention_curve(cls, std::vector<double>{0.2, 0.9});
    REQUIRE(curve.fractions == std::vector<double>{1.0, 0.5, 0.0});
    CHECK(curve.values[0] == 0.5);
    CHECK(curve.values[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(curve.values[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(curve.auc == 0.625); // frozen from the enumeration oracle
}

TEST_CASE("F1 retention curve edge behavior") {
    SUBCASE("all TP stays constant 1") {
        const LesionClassification cls = classification_from({1, 1, 1}, 0);
        const RetentionCurve curve =
            f1_retention_curve(cls, std::vector<double>{0.5, 0.1, 0.9});
        for (double v : curve.values) CHECK(v == 1.0);
    }
    SUBCASE("no predictions with FN > 0 is constant 0") {
        const LesionClassification cls = classification_from({}, 3);
        const RetentionCurve curve = f1_retention_curve(cls, {});
        CHECK(curve.fractions == std::vector<double>{1.0, 0.0});
        CHECK(curve.values == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("no predictions and no truth is constant 1") {
        const LesionClassification cls = classification_from({}, 0);
        const RetentionCurve curve = f1_retention_curve(cls, {});
        CHECK(curve.values == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("score count mismatch") {
        const LesionClassification cls = classification_from({1, 0}, 0);
        CHECK_THROWS_AS(f1_retention_curve(cls, std::vector<double>{0.5}), ValidationError);
    }
}

TEST_CASE("retention curves are monotone and end correctly") {
    rng::Stream stream(21);
    for (int trial = 0; trial < 100; ++trial) {
        // voxel scale
        const std::size_t n = 6 + static_cast<std::size_t>(stream.bounded(12));
        std::vector<float> pred(n), truth(n);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = stream.uniform01() < 0.5 ? 1.0f : 0.0f;
            truth[i] = stream.uniform01() < 0.5 ? 1.0f : 0.0f;
            u[i] = 0.01 + 0.99 * stream.uniform01();
        }
        const Shape shape{1, 1, n};
        const RetentionCurve dsc_curve = dsc_retention_curve(
            Volume3D(shape, VolumeKind::binary, pred), Volume3D(shape, VolumeKind::binary, truth),
            Volume3D::ones(shape, VolumeKind::binary), u, 0.2);
        for (std::size_t i = 0; i + 1 < dsc_curve.values.size(); ++i) {
            REQUIRE(dsc_curve.values[i + 1] >= dsc_curve.values[i]);
        }
        REQUIRE(dsc_curve.values.back() == 1.0);

        // lesion scale
        const std::size_t l = 1 + stream.bounded(6);
        std::vector<int> is_tp(l);
        std::vector<double> scores(l);
        for (std::size_t i = 0; i < l; ++i) {
            is_tp[i] = stream.uniform01() < 0.5;
            scores[i] = 0.01 + 0.99 * stream.uniform01();
        }
        const std::size_t fn = stream.bounded(4);
        const LesionClassification cls = classification_from(is_tp, fn);
        const RetentionCurve f1_curve = f1_retention_curve(cls, scores);
        for (std::size_t i = 0; i + 1 < f1_curve.values.size(); ++i) {
            REQUIRE(f1_curve.values[i + 1] >= f1_curve.values[i]);
        }
        REQUIRE(f1_curve.values.back() ==
                lesion_f1(cls.tp_count(), 0, cls.fn_count));

        // ideal scores dominate pointwise
        const std::vector<double> ideal = ideal_lesion_uncertainty(cls);
        const RetentionCurve ideal_curve = f1_retention_curve(cls, ideal);
        for (std::size_t i = 0; i < f1_curve.values.size(); ++i) {
            REQUIRE(ideal_curve.values[i] >= f1_curve.values[i]);
        }
    }
}

TEST_CASE("strictly increasing transforms leave curves unchanged") {
    rng::Stream stream(31);
    const auto cube7 = [](double v) { return v * v * v + 7.0; };
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 8 + static_cast<std::size_t>(stream.bounded(24));
        std::vector<float> pred(n), truth(n);
        std::vector<double> u(n), tu(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = stream.uniform01() < 0.5 ? 1.0f : 0.0f;
            truth[i] = stream.uniform01() < 0.5 ? 1.0f : 0.0f;
            u[i] = 0.01 + 0.99 * stream.uniform01();
            tu[i] = cube7(u[i]);
        }
        const Shape shape{1, 1, n};
        const Volume3D pv(shape, VolumeKind::binary, pred);
        const Volume3D tv(shape, VolumeKind::binary, truth);
        const Volume3D mask = Volume3D::ones(shape, VolumeKind::binary);
        const RetentionCurve a = dsc_retention_curve(pv, tv, mask, u, 0.15);
        const RetentionCurve b = dsc_retention_curve(pv, tv, mask, tu, 0.15);
        REQUIRE(a.values == b.values);
        REQUIRE(a.auc == b.auc);

        const std::size_t l = 1 + stream.bounded(6);
        std::vector<int> is_tp(l);
        std::vector<double> scores(l), tscores(l);
        for (std::size_t i = 0; i < l; ++i) {
            is_tp[i] = stream.uniform01() < 0.5;
            scores[i] = 0.01 + 0.99 * stream.uniform01();
            tscores[i] = cube7(scores[i]);
        }
        const LesionClassification cls = classification_from(is_tp, stream.bounded(3));
        const RetentionCurve fa = f1_retention_curve(cls, scores);
        const RetentionCurve fb = f1_retention_curve(cls, tscores);
        REQUIRE(fa.values == fb.values);
        REQUIRE(fa.auc == fb.auc);
    }
}

TEST_CASE("interpolation") {
    SUBCASE("identity on the curve's own grid") {
        const RetentionCurve curve = make_curve({1.0, 0.5, 0.0}, {0.2, 0.6, 0.9});
        const RetentionCurve same = interpolate_curve(curve, curve.fractions);
        CHECK(same.values == curve.values);
    }
    SUBCASE("linear midpoint") {
        const RetentionCurve curve = make_curve({1.0, 0.0}, {0.0, 1.0});
        const RetentionCurve mid = interpolate_curve(curve, std::vector<double>{1.0, 0.5, 0.0});
        CHECK(mid.values[1] == 0.5);
    }
    SUBCASE("constant curve stays constant") {
        const RetentionCurve curve = make_curve({1.0, 0.4, 0.0}, {0.7, 0.7, 0.7});
        const RetentionCurve interp = interpolate_curve(curve, uniform_grid(11));
        for (double v : interp.values) CHECK(v == 0.7);
    }
    SUBCASE("malformed grid") {
        const RetentionCurve curve = make_curve({1.0, 0.0}, {0.0, 1.0});
        CHECK_THROWS_AS(interpolate_curve(curve, std::vector<double>{1.0, 0.5}),
                        ValidationError);
        CHECK_THROWS_AS(interpolate_curve(curve, std::vector<double>{0.5, 0.0}),
                        ValidationError);
        CHECK_THROWS_AS(interpolate_curve(curve, std::vector<double>{1.0, 0.5, 0.5, 0.0}),
                        ValidationError);
    }
    SUBCASE("interpolation preserves node values on a refined grid") {
        const RetentionCurve curve =
            make_curve({1.0, 0.75, 0.5, 0.25, 0.0}, {0.1, 0.4, 0.4, 0.8, 1.0});
        const RetentionCurve fine = interpolate_curve(curve, uniform_grid(101));
        CHECK(fine.values[25] == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(fine.values[50] == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(fine.values[100] == 1.0);
        CHECK(fine.values[0] == 0.1);
    }
}

TEST_CASE("average_curves") {
    const std::vector<double> grid = uniform_grid(5);
    SUBCASE("single curve maps to itself") {
        const RetentionCurve curve = make_curve({1.0, 0.5, 0.0}, {0.2, 0.6, 0.9});
        const CurveBundle bundle = average_curves({{"P1", curve}}, grid);
        const RetentionCurve interp = interpolate_curve(curve, grid);
        CHECK(bundle.mean_curve.values == interp.values);
        CHECK(bundle.mean_auc == interp.auc);
    }
    SUBCASE("two constant curves average to the midpoint") {
        const RetentionCurve lo = make_curve({1.0, 0.0}, {0.0, 0.0});
        const RetentionCurve hi = make_curve({1.0, 0.0}, {1.0, 1.0});
        const CurveBundle bundle = average_curves({{"P1", lo}, {"P2", hi}}, grid);
        for (double v : bundle.mean_curve.values) CHECK(v == 0.5);
        CHECK(bundle.mean_auc == 0.5);
    }
    SUBCASE("mean AUC equals the AUC of the mean curve on a shared grid") {
        rng::Stream stream(41);
        std::vector<std::pair<std::string, RetentionCurve>> curves;
        for (int p = 0; p < 5; ++p) {
            std::vector<double> values;
            double v = stream.uniform01();
            for (std::size_t i = 0; i < grid.size(); ++i) {
                v = std::min(1.0, v + 0.2 * stream.uniform01());
                values.push_back(v);
            }
            curves.emplace_back("P" + std::to_string(p),
                                make_curve(std::vector<double>(grid.begin(), grid.end()),
                                           std::move(values)));
        }
        const CurveBundle bundle = average_curves(curves, grid);
        CHECK(bundle.mean_auc == doctest::Approx(bundle.mean_curve.auc).epsilon(1e-12));
    }
    SUBCASE("empty list rejected") {
        CHECK_THROWS_AS(average_curves({}, grid), ValidationError);
    }
}

TEST_CASE("curve validation and AUC") {
    CHECK_THROWS_AS(make_curve({1.0, 0.5}, {0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(make_curve({0.9, 0.0}, {0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(make_curve({1.0, 0.5, 0.5, 0.0}, {0.0, 0.0, 0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(make_curve({1.0, 0.0}, {0.0, 1.5}), ValidationError);

    // AUC of a constant curve is the constant, up to rounding
    for (double c : {0.0, 0.3, 0.7, 1.0}) {
        const RetentionCurve curve =
            make_curve(uniform_grid(101), std::vector<double>(101, c));
        CHECK(std::abs(curve.auc - c) <= 1e-12);
        CHECK(curve.auc >= 0.0);
        CHECK(curve.auc <= 1.0);
    }
}
