#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "uqeval/errors.hpp"

namespace uqeval {

// Grid dimensions, always ordered (depth, height, width); flat storage is
// row-major, i.e. x fastest.
struct Shape {
    std::size_t depth = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t total() const { return depth * height * width; }

    std::size_t flat(std::size_t z, std::size_t y, std::size_t x) const {
        return (z * height + y) * width + x;
    }

    bool operator==(const Shape&) const = default;

    std::string str() const;
};

enum class VolumeKind { probability, uncertainty, binary };

std::string_view to_string(VolumeKind kind);

// Dense 3D scalar grid. Values are float32, matching the on-disk payload;
// immutable after construction.
class Volume3D {
public:
    Volume3D(Shape shape, VolumeKind kind, std::vector<float> data);

    static Volume3D filled(Shape shape, VolumeKind kind, float value);
    static Volume3D zeros(Shape shape, VolumeKind kind) { return filled(shape, kind, 0.0f); }
    static Volume3D ones(Shape shape, VolumeKind kind) { return filled(shape, kind, 1.0f); }

    const Shape& shape() const { return shape_; }
    VolumeKind kind() const { return kind_; }
    const std::vector<float>& data() const { return data_; }
    std::size_t size() const { return data_.size(); }
    float operator[](std::size_t i) const { return data_[i]; }
    float at(std::size_t z, std::size_t y, std::size_t x) const {
        return data_[shape_.flat(z, y, x)];
    }

private:
    Shape shape_;
    VolumeKind kind_;
    std::vector<float> data_;
};

// Widen to double, e.g. for use as a ranking array.
std::vector<double> as_doubles(const Volume3D& volume);

// One patient's ensemble: K member probability maps plus ground truth.
// brain_mask defaults to the all-ones mask when absent from the source.
struct EnsembleSample {
    std::string patient_id;
    std::vector<Volume3D> member_probs;
    Volume3D ground_truth;
    Volume3D brain_mask;

    std::size_t member_count() const { return member_probs.size(); }
    const Shape& shape() const { return ground_truth.shape(); }
};

// Validates shape agreement and K >= 2; fills in the default brain mask.
EnsembleSample make_sample(std::string patient_id,
                           std::vector<Volume3D> member_probs,
                           Volume3D ground_truth,
                           std::optional<Volume3D> brain_mask = std::nullopt);

} // namespace uqeval
