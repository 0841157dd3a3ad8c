#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "uqeval/rng.hpp"
#include "uqeval/voxel_uncertainty.hpp"

using namespace uqeval;

namespace {

const std::set<VoxelMeasure> kAll(kAllVoxelMeasures.begin(), kAllVoxelMeasures.end());

// One-voxel sample from per-member probabilities.
EnsembleSample sample_from(const std::vector<float>& probs) {
    const Shape shape{1, 1, 1};
    std::vector<Volume3D> members;
    for (float p : probs) {
        members.push_back(Volume3D(shape, VolumeKind::probability, {p}));
    }
    return make_sample("P1", std::move(members), Volume3D::zeros(shape, VolumeKind::binary));
}

// Sample with n voxels and K members, uniform random probabilities.
EnsembleSample random_sample(std::size_t n, std::size_t k, std::uint64_t seed) {
    const Shape shape{1, 1, n};
    rng::Stream stream(seed);
    std::vector<Volume3D> members;
    for (std::size_t m = 0; m < k; ++m) {
        std::vector<float> data(n);
        for (float& v : data) v = static_cast<float>(stream.uniform01());
        members.push_back(Volume3D(shape, VolumeKind::probability, std::move(data)));
    }
    return make_sample("P1", std::move(members), Volume3D::zeros(shape, VolumeKind::binary));
}

} // namespace

TEST_CASE("identical members at maximum entropy") {
    const UncertaintyMaps maps = compute_voxel_uncertainties(sample_from({0.5f, 0.5f}), kAll);
    CHECK(maps.at(VoxelMeasure::eoe)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(maps.at(VoxelMeasure::exe)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(maps.at(VoxelMeasure::mi)[0]) < 1e-12);
    CHECK(std::abs(maps.at(VoxelMeasure::epkl)[0]) < 1e-12);
    CHECK(std::abs(maps.at(VoxelMeasure::rmi)[0]) < 1e-12);
    CHECK(maps.at(VoxelMeasure::nc)[0] == -0.5);
}

TEST_CASE("certain agreement clamps cleanly") {
    const UncertaintyMaps maps = compute_voxel_uncertainties(sample_from({1.0f, 1.0f}), kAll);
    CHECK(std::abs(maps.at(VoxelMeasure::eoe)[0]) <= 1e-6);
    CHECK(std::abs(maps.at(VoxelMeasure::exe)[0]) <= 1e-6);
    CHECK(std::abs(maps.at(VoxelMeasure::mi)[0]) <= 1e-6);
    CHECK(std::abs(maps.at(VoxelMeasure::nc)[0] - (-1.0)) <= 1e-6);
}

TEST_CASE("frozen spot check for K=2, p=(0.9, 0.5)") {
    const UncertaintyMaps maps = compute_voxel_uncertainties(sample_from({0.9f, 0.5f}), kAll);
    CHECK(std::abs(maps.at(VoxelMeasure::eoe)[0] - 0.610864) < 1e-5);
    CHECK(std::abs(maps.at(VoxelMeasure::exe)[0] - 0.509115) < 1e-5);
    CHECK(std::abs(maps.at(VoxelMeasure::mi)[0] - 0.101749) < 1e-5);
    CHECK(std::abs(maps.at(VoxelMeasure::epkl)[0] - 0.219723) < 1e-5);
    CHECK(std::abs(maps.at(VoxelMeasure::rmi)[0] - 0.117974) < 1e-5);
    CHECK(std::abs(maps.at(VoxelMeasure::nc)[0] - (-0.7)) < 1e-7);

    // cross-check against the KL-route oracle at the stored precision
    const auto o = oracles::voxel_measures({double(0.9f), double(0.5f)});
    CHECK(maps.at(VoxelMeasure::mi)[0] == doctest::Approx(o.mi).epsilon(1e-9));
    CHECK(maps.at(VoxelMeasure::epkl)[0] == doctest::Approx(o.epkl).epsilon(1e-9));
}

TEST_CASE("identities against the KL-route oracle") {
    for (std::size_t k : {2u, 3u, 5u}) {
        const EnsembleSample sample = random_sample(2000, k, 1000 + k);
        const UncertaintyMaps maps = compute_voxel_uncertainties(sample, kAll);
        for (std::size_t i = 0; i < 2000; ++i) {
            std::vector<double> probs;
            for (std::size_t m = 0; m < k; ++m) {
                probs.push_back(static_cast<double>(sample.member_probs[m][i]));
            }
            const auto o = oracles::voxel_measures(probs);
            REQUIRE(std::abs(maps.at(VoxelMeasure::eoe)[i] - o.eoe) < 1e-9);
            REQUIRE(std::abs(maps.at(VoxelMeasure::exe)[i] - o.exe) < 1e-9);
            REQUIRE(std::abs(maps.at(VoxelMeasure::nc)[i] - o.nc) < 1e-9);
            // MI and EPKL come from different formulas on the two sides
            REQUIRE(std::abs(maps.at(VoxelMeasure::mi)[i] - o.mi) < 1e-6);
            REQUIRE(std::abs(maps.at(VoxelMeasure::epkl)[i] - o.epkl) < 1e-6);
            REQUIRE(std::abs(maps.at(VoxelMeasure::rmi)[i] - o.rmi) < 1e-6);
        }
    }
}

TEST_CASE("non-negativity of knowledge measures") {
    for (std::size_t k : {2u, 3u, 5u}) {
        const EnsembleSample sample = random_sample(40000, k, 7 * k);
        const UncertaintyMaps maps = compute_voxel_uncertainties(sample, kAll);
        for (std::size_t i = 0; i < sample.shape().total(); ++i) {
            REQUIRE(maps.at(VoxelMeasure::mi)[i] >= -1e-9);
            REQUIRE(maps.at(VoxelMeasure::epkl)[i] - maps.at(VoxelMeasure::mi)[i] >= -1e-9);
            REQUIRE(maps.at(VoxelMeasure::rmi)[i] >= -1e-9);
            REQUIRE(maps.at(VoxelMeasure::nc)[i] >= -1.0);
            REQUIRE(maps.at(VoxelMeasure::nc)[i] <= -0.5);
            REQUIRE(maps.at(VoxelMeasure::eoe)[i] >= 0.0);
            REQUIRE(maps.at(VoxelMeasure::eoe)[i] <= std::log(2.0) + 1e-9);
        }
    }
}

TEST_CASE("identical members leave no knowledge uncertainty") {
    const Shape shape{1, 1, 64};
    rng::Stream stream(5);
    std::vector<float> data(shape.total());
    for (float& v : data) v = static_cast<float>(stream.uniform01());
    const Volume3D map(shape, VolumeKind::probability, data);
    const EnsembleSample sample = make_sample(
        "P1", {map, map, map}, Volume3D::zeros(shape, VolumeKind::binary));
    const UncertaintyMaps maps = compute_voxel_uncertainties(sample, kAll);
    for (std::size_t i = 0; i < shape.total(); ++i) {
        CHECK(std::abs(maps.at(VoxelMeasure::mi)[i]) <= 1e-6);
        CHECK(std::abs(maps.at(VoxelMeasure::epkl)[i]) <= 1e-6);
        CHECK(std::abs(maps.at(VoxelMeasure::rmi)[i]) <= 1e-6);
        CHECK(std::abs(maps.at(VoxelMeasure::eoe)[i] - maps.at(VoxelMeasure::exe)[i]) <= 1e-6);
    }
}

TEST_CASE("member order does not matter") {
    const EnsembleSample sample = random_sample(512, 4, 99);
    const UncertaintyMaps a = compute_voxel_uncertainties(sample, kAll);

    std::vector<Volume3D> shuffled = {sample.member_probs[2], sample.member_probs[0],
                                      sample.member_probs[3], sample.member_probs[1]};
    const EnsembleSample reordered =
        make_sample("P1", std::move(shuffled), Volume3D::zeros(sample.shape(), VolumeKind::binary));
    const UncertaintyMaps b = compute_voxel_uncertainties(reordered, kAll);
    for (VoxelMeasure m : kAllVoxelMeasures) {
        for (std::size_t i = 0; i < sample.shape().total(); ++i) {
            REQUIRE(std::abs(a.at(m)[i] - b.at(m)[i]) <= 1e-6);
        }
    }
}

TEST_CASE("out-of-mask voxels are zeroed") {
    const Shape shape{1, 1, 4};
    std::vector<Volume3D> members = {
        Volume3D(shape, VolumeKind::probability, {0.5f, 0.5f, 0.5f, 0.5f}),
        Volume3D(shape, VolumeKind::probability, {0.9f, 0.9f, 0.9f, 0.9f})};
    const EnsembleSample sample =
        make_sample("P1", std::move(members), Volume3D::zeros(shape, VolumeKind::binary),
                    Volume3D(shape, VolumeKind::binary, {1.0f, 0.0f, 1.0f, 0.0f}));
    const UncertaintyMaps maps = compute_voxel_uncertainties(sample, kAll);
    CHECK(maps.at(VoxelMeasure::eoe)[0] > 0.0);
    CHECK(maps.at(VoxelMeasure::eoe)[1] == 0.0);
    CHECK(maps.at(VoxelMeasure::eoe)[3] == 0.0);
    CHECK(maps.at(VoxelMeasure::nc)[1] == 0.0);
}

TEST_CASE("ideal voxel uncertainty") {
    const Shape shape{1, 1, 2};
    const Volume3D pred(shape, VolumeKind::binary, {1.0f, 0.0f});
    const Volume3D truth(shape, VolumeKind::binary, {1.0f, 1.0f});
    const Volume3D ideal = ideal_voxel_uncertainty(pred, truth);
    CHECK(ideal[0] == 0.0f);
    CHECK(ideal[1] == 1.0f);

    const Volume3D same = ideal_voxel_uncertainty(truth, truth);
    CHECK(same[0] == 0.0f);
    CHECK(same[1] == 0.0f);

    const Volume3D inverted(shape, VolumeKind::binary, {0.0f, 0.0f});
    const Volume3D flipped = ideal_voxel_uncertainty(inverted, Volume3D::ones(shape, VolumeKind::binary));
    CHECK(flipped[0] == 1.0f);
    CHECK(flipped[1] == 1.0f);

    CHECK_THROWS_AS(ideal_voxel_uncertainty(pred, Volume3D::zeros(Shape{1, 2, 1}, VolumeKind::binary)),
                    ValidationError);
}

TEST_CASE("random voxel uncertainty is seeded and in range") {
    const Shape shape{64, 8, 8};
    const Volume3D a = random_voxel_uncertainty(shape, 7);
    const Volume3D b = random_voxel_uncertainty(shape, 7);
    const Volume3D c = random_voxel_uncertainty(shape, 8);
    CHECK(a.data() == b.data());
    CHECK(a.data() != c.data());
    for (float v : a.data()) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v < 1.0f);
    }
}

TEST_CASE("K < 2 is rejected") {
    const Shape shape{1, 1, 1};
    CHECK_THROWS_AS(make_sample("P1", {Volume3D::zeros(shape, VolumeKind::probability)},
                                Volume3D::zeros(shape, VolumeKind::binary)),
                    ValidationError);
}

TEST_CASE("measure tokens round-trip") {
    for (VoxelMeasure m : kAllVoxelMeasures) {
        CHECK(voxel_measure_from_token(to_token(m)) == m);
    }
    CHECK_THROWS_AS(voxel_measure_from_token("entropy"), ValidationError);
}
