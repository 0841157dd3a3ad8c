#include "uqeval/volume.hpp"

#include <cmath>
#include <utility>

namespace uqeval {

std::string Shape::str() const {
    return "(" + std::to_string(depth) + ", " + std::to_string(height) + ", " +
           std::to_string(width) + ")";
}

std::string_view to_string(VolumeKind kind) {
    switch (kind) {
    case VolumeKind::probability: return "probability";
    case VolumeKind::uncertainty: return "uncertainty";
    case VolumeKind::binary: return "binary";
    }
    return "?";
}

Volume3D::Volume3D(Shape shape, VolumeKind kind, std::vector<float> data)
    : shape_(shape), kind_(kind), data_(std::move(data)) {
    if (shape_.total() == 0) {
        throw ValidationError("volume shape " + shape_.str() + " has a zero dimension");
    }
    if (data_.size() != shape_.total()) {
        throw ValidationError("volume data length " + std::to_string(data_.size()) +
                              " does not match shape " + shape_.str());
    }
    if (kind_ == VolumeKind::probability) {
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!(data_[i] >= 0.0f && data_[i] <= 1.0f)) {
                throw ValidationError("probability value " + std::to_string(data_[i]) +
                                      " outside [0,1] at flat index " + std::to_string(i));
            }
        }
    } else if (kind_ == VolumeKind::binary) {
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (data_[i] != 0.0f && data_[i] != 1.0f) {
                throw ValidationError("binary value " + std::to_string(data_[i]) +
                                      " not in {0,1} at flat index " + std::to_string(i));
            }
        }
    } else {
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!std::isfinite(data_[i])) {
                throw ValidationError("non-finite uncertainty value at flat index " +
                                      std::to_string(i));
            }
        }
    }
}

Volume3D Volume3D::filled(Shape shape, VolumeKind kind, float value) {
    return Volume3D(shape, kind, std::vector<float>(shape.total(), value));
}

std::vector<double> as_doubles(const Volume3D& volume) {
    return std::vector<double>(volume.data().begin(), volume.data().end());
}

EnsembleSample make_sample(std::string patient_id, std::vector<Volume3D> member_probs,
                           Volume3D ground_truth, std::optional<Volume3D> brain_mask) {
    if (member_probs.size() < 2) {
        throw ValidationError("sample '" + patient_id + "': ensemble needs K >= 2 members, got " +
                              std::to_string(member_probs.size()));
    }
    const Shape& shape = ground_truth.shape();
    for (std::size_t k = 0; k < member_probs.size(); ++k) {
        if (member_probs[k].shape() != shape) {
            throw ValidationError("sample '" + patient_id + "': member " + std::to_string(k) +
                                  " shape " + member_probs[k].shape().str() +
                                  " does not match ground truth " + shape.str());
        }
        if (member_probs[k].kind() != VolumeKind::probability) {
            throw ValidationError("sample '" + patient_id + "': member " + std::to_string(k) +
                                  " is not a probability volume");
        }
    }
    if (ground_truth.kind() != VolumeKind::binary) {
        throw ValidationError("sample '" + patient_id + "': ground truth must be binary");
    }
    if (brain_mask) {
        if (brain_mask->shape() != shape) {
            throw ValidationError("sample '" + patient_id + "': brain mask shape " +
                                  brain_mask->shape().str() + " does not match " + shape.str());
        }
        if (brain_mask->kind() != VolumeKind::binary) {
            throw ValidationError("sample '" + patient_id + "': brain mask must be binary");
        }
    }
    Volume3D mask = brain_mask ? std::move(*brain_mask)
                               : Volume3D::ones(shape, VolumeKind::binary);
    return EnsembleSample{std::move(patient_id), std::move(member_probs),
                          std::move(ground_truth), std::move(mask)};
}

} // namespace uqeval
