#include "uqeval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uqeval/npy_io.hpp"
#include "uqeval/rng.hpp"

namespace uqeval {

namespace {

struct Structure {
    std::vector<std::size_t> voxels;
    bool spurious = false;
};

// Voxelized ellipsoid |(z-cz)/rz|^2 + |(y-cy)/ry|^2 + |(x-cx)/rx|^2 <= 1.
std::vector<std::size_t> ellipsoid_voxels(const Shape& shape, double cz, double cy, double cx,
                                          double rz, double ry, double rx) {
    std::vector<std::size_t> voxels;
    const auto lo = [](double c, double r) {
        return static_cast<std::size_t>(std::max(0.0, std::floor(c - r)));
    };
    const auto hi = [](double c, double r, std::size_t dim) {
        return std::min(dim - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(c + r))));
    };
    for (std::size_t z = lo(cz, rz); z <= hi(cz, rz, shape.depth); ++z) {
        for (std::size_t y = lo(cy, ry); y <= hi(cy, ry, shape.height); ++y) {
            for (std::size_t x = lo(cx, rx); x <= hi(cx, rx, shape.width); ++x) {
                const double dz = (static_cast<double>(z) - cz) / rz;
                const double dy = (static_cast<double>(y) - cy) / ry;
                const double dx = (static_cast<double>(x) - cx) / rx;
                if (dz * dz + dy * dy + dx * dx <= 1.0) {
                    voxels.push_back(shape.flat(z, y, x));
                }
            }
        }
    }
    return voxels;
}

// Mark a Chebyshev ball around each voxel; keeps later structures separated
// so blurring cannot merge them into one component.
void mark_forbidden(std::vector<std::uint8_t>& forbidden, const Shape& shape,
                    const std::vector<std::size_t>& voxels, int margin) {
    for (std::size_t v : voxels) {
        const std::size_t z = v / (shape.height * shape.width);
        const std::size_t rem = v % (shape.height * shape.width);
        const std::size_t y = rem / shape.width;
        const std::size_t x = rem % shape.width;
        for (int dz = -margin; dz <= margin; ++dz) {
            for (int dy = -margin; dy <= margin; ++dy) {
                for (int dx = -margin; dx <= margin; ++dx) {
                    const auto nz = static_cast<std::ptrdiff_t>(z) + dz;
                    const auto ny = static_cast<std::ptrdiff_t>(y) + dy;
                    const auto nx = static_cast<std::ptrdiff_t>(x) + dx;
                    if (nz < 0 || ny < 0 || nx < 0 ||
                        nz >= static_cast<std::ptrdiff_t>(shape.depth) ||
                        ny >= static_cast<std::ptrdiff_t>(shape.height) ||
                        nx >= static_cast<std::ptrdiff_t>(shape.width)) {
                        continue;
                    }
                    forbidden[shape.flat(static_cast<std::size_t>(nz),
                                         static_cast<std::size_t>(ny),
                                         static_cast<std::size_t>(nx))] = 1;
                }
            }
        }
    }
}

std::vector<Structure> place_structures(const Shape& shape, rng::Stream& stream, int count,
                                        double r_min, double r_max, bool spurious,
                                        std::vector<std::uint8_t>& forbidden,
                                        const std::string& patient_id) {
    constexpr int kMaxRetries = 200;
    constexpr int kSeparation = 3;
    std::vector<Structure> placed;
    for (int s = 0; s < count; ++s) {
        bool ok = false;
        for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
            const double rz = stream.uniform(r_min, r_max);
            const double ry = stream.uniform(r_min, r_max);
            const double rx = stream.uniform(r_min, r_max);
            const double margin = std::max({rz, ry, rx}) + 1.0;
            if (2.0 * margin + 2.0 >= static_cast<double>(
                                          std::min({shape.depth, shape.height, shape.width}))) {
                continue;
            }
            const double cz = stream.uniform(margin, static_cast<double>(shape.depth) - margin);
            const double cy = stream.uniform(margin, static_cast<double>(shape.height) - margin);
            const double cx = stream.uniform(margin, static_cast<double>(shape.width) - margin);
            std::vector<std::size_t> voxels = ellipsoid_voxels(shape, cz, cy, cx, rz, ry, rx);
            if (voxels.empty()) continue;
            bool clash = false;
            for (std::size_t v : voxels) {
                if (forbidden[v]) {
                    clash = true;
                    break;
                }
            }
            if (clash) continue;
            mark_forbidden(forbidden, shape, voxels, kSeparation);
            placed.push_back(Structure{std::move(voxels), spurious});
            ok = true;
        }
        if (!ok) {
            throw ValidationError("synthetic spec infeasible: could not place " +
                                  std::string(spurious ? "spurious blob " : "lesion ") +
                                  std::to_string(s + 1) + " for " + patient_id +
                                  " without overlap");
        }
    }
    return placed;
}

// 3-tap [0.25, 0.5, 0.25] blur along each axis.
void blur_once(std::vector<double>& field, const Shape& shape) {
    std::vector<double> tmp(field.size());
    const auto d = static_cast<std::ptrdiff_t>(shape.depth);
    const auto h = static_cast<std::ptrdiff_t>(shape.height);
    const auto w = static_cast<std::ptrdiff_t>(shape.width);
    const auto idx = [&](std::ptrdiff_t z, std::ptrdiff_t y, std::ptrdiff_t x) {
        return static_cast<std::size_t>((z * h + y) * w + x);
    };
    const auto pass = [&](int axis) {
        for (std::ptrdiff_t z = 0; z < d; ++z) {
            for (std::ptrdiff_t y = 0; y < h; ++y) {
                for (std::ptrdiff_t x = 0; x < w; ++x) {
                    std::ptrdiff_t za = z, zb = z, ya = y, yb = y, xa = x, xb = x;
                    if (axis == 0) { za = std::max<std::ptrdiff_t>(z - 1, 0); zb = std::min(z + 1, d - 1); }
                    if (axis == 1) { ya = std::max<std::ptrdiff_t>(y - 1, 0); yb = std::min(y + 1, h - 1); }
                    if (axis == 2) { xa = std::max<std::ptrdiff_t>(x - 1, 0); xb = std::min(x + 1, w - 1); }
                    tmp[idx(z, y, x)] = 0.25 * field[idx(za, ya, xa)] +
                                        0.5 * field[idx(z, y, x)] +
                                        0.25 * field[idx(zb, yb, xb)];
                }
            }
        }
        field.swap(tmp);
    };
    pass(0);
    pass(1);
    pass(2);
}

void validate_spec(const SynthSpec& spec) {
    if (spec.patients < 1) throw ValidationError("synth: patients must be >= 1");
    if (spec.member_count < 2) throw ValidationError("synth: member_count must be >= 2");
    if (spec.shape.total() == 0) throw ValidationError("synth: shape has a zero dimension");
    if (spec.lesion_count_min < 1 || spec.lesion_count_max < spec.lesion_count_min) {
        throw ValidationError("synth: invalid lesion count range");
    }
    if (spec.spurious_count_min < 0 || spec.spurious_count_max < spec.spurious_count_min) {
        throw ValidationError("synth: invalid spurious count range");
    }
    if (!(spec.lesion_radius_min > 0.0) || spec.lesion_radius_max < spec.lesion_radius_min) {
        throw ValidationError("synth: invalid lesion radius range");
    }
    if (!(spec.spurious_radius_min > 0.0) || spec.spurious_radius_max < spec.spurious_radius_min) {
        throw ValidationError("synth: invalid spurious radius range");
    }
    if (spec.miss_probability < 0.0 || spec.miss_probability > 1.0) {
        throw ValidationError("synth: miss_probability must lie in [0,1]");
    }
    if (spec.spurious_miss_probability &&
        (*spec.spurious_miss_probability < 0.0 || *spec.spurious_miss_probability > 1.0)) {
        throw ValidationError("synth: spurious_miss_probability must lie in [0,1]");
    }
    if (spec.member_noise < 0.0) throw ValidationError("synth: member_noise must be >= 0");
    if (spec.smoothing_passes < 0) throw ValidationError("synth: smoothing_passes must be >= 0");
    if (!(spec.background_prob >= 0.0 && spec.foreground_prob <= 1.0 &&
          spec.background_prob < spec.foreground_prob)) {
        throw ValidationError("synth: need 0 <= background_prob < foreground_prob <= 1");
    }
}

} // namespace

DatasetManifest synth_generate(const SynthSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_dir) {
    validate_spec(spec);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    }

    const Shape shape = spec.shape;
    const std::size_t n = shape.total();
    const double spurious_miss = spec.spurious_miss_probability.value_or(spec.miss_probability);

    DatasetManifest manifest;
    manifest.version = 1;

    for (std::size_t p = 0; p < spec.patients; ++p) {
        std::string patient_id = "P" + std::to_string(p + 1);
        if (patient_id.size() < 4) {
            patient_id.insert(1, std::string(4 - patient_id.size(), '0'));
        }

        rng::Stream truth_stream(rng::derive(rng::derive(seed, "synth-truth"), patient_id));
        std::vector<std::uint8_t> forbidden(n, 0);
        const int lesion_count =
            truth_stream.uniform_int(spec.lesion_count_min, spec.lesion_count_max);
        std::vector<Structure> structures =
            place_structures(shape, truth_stream, lesion_count, spec.lesion_radius_min,
                             spec.lesion_radius_max, false, forbidden, patient_id);
        const int spurious_count =
            truth_stream.uniform_int(spec.spurious_count_min, spec.spurious_count_max);
        std::vector<Structure> blobs =
            place_structures(shape, truth_stream, spurious_count, spec.spurious_radius_min,
                             spec.spurious_radius_max, true, forbidden, patient_id);
        structures.insert(structures.end(), std::make_move_iterator(blobs.begin()),
                          std::make_move_iterator(blobs.end()));

        std::vector<float> truth(n, 0.0f);
        for (const Structure& s : structures) {
            if (s.spurious) continue;
            for (std::size_t v : s.voxels) truth[v] = 1.0f;
        }
        const std::string gt_name = patient_id + "_gt.npy";
        save_array(Volume3D(shape, VolumeKind::binary, truth), out_dir / gt_name);

        ManifestEntry entry;
        entry.patient_id = patient_id;
        entry.ground_truth_path = gt_name;

        for (std::size_t k = 0; k < spec.member_count; ++k) {
            rng::Stream drop_stream(
                rng::derive(rng::derive(seed, "synth-drop", k), patient_id));
            rng::Stream noise_stream(
                rng::derive(rng::derive(seed, "synth-noise", k), patient_id));

            std::vector<double> field(n, spec.background_prob);
            for (const Structure& s : structures) {
                const double miss = s.spurious ? spurious_miss : spec.miss_probability;
                const double draw = drop_stream.uniform01(); // one draw per structure
                const bool eligible = !spec.miss_member_only || *spec.miss_member_only == k;
                if (eligible && draw < miss) continue;
                for (std::size_t v : s.voxels) field[v] = spec.foreground_prob;
            }
            for (int pass = 0; pass < spec.smoothing_passes; ++pass) {
                blur_once(field, shape);
            }
            std::vector<float> probs(n);
            for (std::size_t i = 0; i < n; ++i) {
                double v = field[i] +
                           noise_stream.uniform(-spec.member_noise, spec.member_noise);
                probs[i] = static_cast<float>(std::clamp(v, 0.01, 0.99));
            }
            const std::string m_name = patient_id + "_m" + std::to_string(k) + ".npy";
            save_array(Volume3D(shape, VolumeKind::probability, std::move(probs)),
                       out_dir / m_name);
            entry.member_prob_paths.emplace_back(m_name);
        }

        if (spec.write_brain_mask) {
            std::vector<std::size_t> mask_voxels = ellipsoid_voxels(
                shape, (static_cast<double>(shape.depth) - 1.0) / 2.0,
                (static_cast<double>(shape.height) - 1.0) / 2.0,
                (static_cast<double>(shape.width) - 1.0) / 2.0,
                static_cast<double>(shape.depth) * 0.48,
                static_cast<double>(shape.height) * 0.48,
                static_cast<double>(shape.width) * 0.48);
            std::vector<float> mask(n, 0.0f);
            for (std::size_t v : mask_voxels) mask[v] = 1.0f;
            const std::string mask_name = patient_id + "_mask.npy";
            save_array(Volume3D(shape, VolumeKind::binary, std::move(mask)),
                       out_dir / mask_name);
            entry.brain_mask_path = mask_name;
        }
        manifest.samples.push_back(std::move(entry));
    }

    write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

} // namespace uqeval
