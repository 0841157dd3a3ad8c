#include "uqeval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "uqeval/report.hpp"

#include <nlohmann/json.hpp>

#include "uqeval/manifest.hpp"
#include "uqeval/rng.hpp"

namespace uqeval {

using nlohmann::json;

std::string to_token(const LesionMeasure& measure) {
    switch (measure.kind) {
    case LesionMeasure::Kind::mean: return "mean-" + std::string(to_token(measure.base));
    case LesionMeasure::Kind::logsum: return "logsum-" + std::string(to_token(measure.base));
    case LesionMeasure::Kind::ddu: return "ddu";
    case LesionMeasure::Kind::ddu_true: return "ddu-true";
    case LesionMeasure::Kind::ideal: return "ideal";
    case LesionMeasure::Kind::random: return "random";
    }
    return "?";
}

LesionMeasure lesion_measure_from_token(std::string_view token) {
    std::string t(token);
    std::replace(t.begin(), t.end(), '_', '-');
    LesionMeasure m;
    if (t == "ddu") {
        m.kind = LesionMeasure::Kind::ddu;
    } else if (t == "ddu-true") {
        m.kind = LesionMeasure::Kind::ddu_true;
    } else if (t == "ideal") {
        m.kind = LesionMeasure::Kind::ideal;
    } else if (t == "random") {
        m.kind = LesionMeasure::Kind::random;
    } else if (t.rfind("mean-", 0) == 0) {
        m.kind = LesionMeasure::Kind::mean;
        m.base = voxel_measure_from_token(t.substr(5));
    } else if (t.rfind("logsum-", 0) == 0) {
        m.kind = LesionMeasure::Kind::logsum;
        m.base = voxel_measure_from_token(t.substr(7));
    } else {
        throw ValidationError("unknown lesion measure '" + std::string(token) + "'");
    }
    return m;
}

std::vector<LesionMeasure> all_lesion_measures() {
    std::vector<LesionMeasure> out;
    for (VoxelMeasure base : kAllVoxelMeasures) {
        out.push_back({LesionMeasure::Kind::mean, base});
    }
    for (VoxelMeasure base : kAllVoxelMeasures) {
        out.push_back({LesionMeasure::Kind::logsum, base});
    }
    out.push_back({LesionMeasure::Kind::ddu, VoxelMeasure::eoe});
    out.push_back({LesionMeasure::Kind::ddu_true, VoxelMeasure::eoe});
    return out;
}

void validate_config(const PipelineConfig& config, std::size_t member_count) {
    if (!(config.ensemble_threshold > 0.0 && config.ensemble_threshold < 1.0)) {
        throw ValidationError("ensemble_threshold must lie in (0,1)");
    }
    if (config.member_thresholds) {
        if (config.member_thresholds->size() != member_count) {
            throw ValidationError("member_thresholds lists " +
                                  std::to_string(config.member_thresholds->size()) +
                                  " values for K=" + std::to_string(member_count) + " members");
        }
        for (double t : *config.member_thresholds) {
            if (!(t > 0.0 && t < 1.0)) {
                throw ValidationError("member threshold " + std::to_string(t) +
                                      " outside (0,1)");
            }
        }
    }
    if (!(config.tau > 0.0 && config.tau <= 1.0)) {
        throw ValidationError("tau must lie in (0,1]");
    }
    if (!(config.gamma > 0.0 && config.gamma < 1.0)) {
        throw ValidationError("gamma must lie in (0,1)");
    }
    if (config.grid_size < 2) {
        throw ValidationError("grid_size must be >= 2");
    }
    if (config.bootstrap_sample_size < 1 || config.bootstrap_repetitions < 1) {
        throw ValidationError("bootstrap parameters must be >= 1");
    }
    if (config.threads < 1) {
        throw ValidationError("threads must be >= 1");
    }
}

json config_to_json(const PipelineConfig& config) {
    json j;
    j["manifest"] = config.manifest.generic_string();
    j["ensemble_threshold"] = config.ensemble_threshold;
    if (config.member_thresholds) {
        j["member_thresholds"] = *config.member_thresholds;
    } else {
        j["member_thresholds"] = nullptr;
    }
    j["tau"] = config.tau;
    j["gamma"] = config.gamma;
    j["connectivity"] = static_cast<int>(config.connectivity);
    j["grid_size"] = config.grid_size;
    j["seed"] = config.seed;
    j["fn_mode"] = std::string(to_string(config.fn_mode));
    json vm = json::array();
    for (VoxelMeasure m :
         config.voxel_measures.empty()
             ? std::vector<VoxelMeasure>(kAllVoxelMeasures.begin(), kAllVoxelMeasures.end())
             : config.voxel_measures) {
        vm.push_back(std::string(to_token(m)));
    }
    j["voxel_measures"] = vm;
    json lm = json::array();
    for (const LesionMeasure& m :
         config.lesion_measures.empty() ? all_lesion_measures() : config.lesion_measures) {
        lm.push_back(to_token(m));
    }
    j["lesion_measures"] = lm;
    j["skip_empty"] = config.skip_empty;
    j["bootstrap_sample_size"] = config.bootstrap_sample_size;
    j["bootstrap_repetitions"] = config.bootstrap_repetitions;
    return j;
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig config;
    try {
        if (j.contains("manifest")) config.manifest = j.at("manifest").get<std::string>();
        if (j.contains("ensemble_threshold")) {
            config.ensemble_threshold = j.at("ensemble_threshold").get<double>();
        }
        if (j.contains("member_thresholds") && !j.at("member_thresholds").is_null()) {
            config.member_thresholds = j.at("member_thresholds").get<std::vector<double>>();
        }
        if (j.contains("tau")) config.tau = j.at("tau").get<double>();
        if (j.contains("gamma")) config.gamma = j.at("gamma").get<double>();
        if (j.contains("connectivity")) {
            config.connectivity = connectivity_from_int(j.at("connectivity").get<int>());
        }
        if (j.contains("grid_size")) config.grid_size = j.at("grid_size").get<std::size_t>();
        if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("fn_mode")) {
            config.fn_mode = fn_mode_from_string(j.at("fn_mode").get<std::string>());
        }
        if (j.contains("voxel_measures")) {
            for (const json& m : j.at("voxel_measures")) {
                config.voxel_measures.push_back(
                    voxel_measure_from_token(m.get<std::string>()));
            }
        }
        if (j.contains("lesion_measures")) {
            for (const json& m : j.at("lesion_measures")) {
                config.lesion_measures.push_back(
                    lesion_measure_from_token(m.get<std::string>()));
            }
        }
        if (j.contains("skip_empty")) config.skip_empty = j.at("skip_empty").get<bool>();
        if (j.contains("bootstrap_sample_size")) {
            config.bootstrap_sample_size = j.at("bootstrap_sample_size").get<std::size_t>();
        }
        if (j.contains("bootstrap_repetitions")) {
            config.bootstrap_repetitions = j.at("bootstrap_repetitions").get<std::size_t>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid config JSON: ") + e.what());
    }
    return config;
}

Volume3D binarize(const Volume3D& probabilities, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ValidationError("binarize threshold must lie in (0,1); got " +
                              std::to_string(threshold));
    }
    if (probabilities.kind() == VolumeKind::uncertainty) {
        throw ValidationError("binarize expects a probability or binary volume");
    }
    const auto t = static_cast<float>(threshold);
    const std::size_t n = probabilities.size();
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = probabilities[i] > t ? 1.0f : 0.0f;
    }
    return Volume3D(probabilities.shape(), VolumeKind::binary, std::move(data));
}

Volume3D ensemble_mean(const std::vector<Volume3D>& members) {
    if (members.size() < 2) {
        throw ValidationError("ensemble_mean needs K >= 2 members");
    }
    const Shape shape = members.front().shape();
    for (const Volume3D& m : members) {
        if (m.shape() != shape) {
            throw ValidationError("ensemble_mean: member shapes disagree");
        }
    }
    const std::size_t n = shape.total();
    const double k = static_cast<double>(members.size());
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const Volume3D& m : members) sum += static_cast<double>(m[i]);
        data[i] = static_cast<float>(sum / k);
    }
    return Volume3D(shape, VolumeKind::probability, std::move(data));
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(static_cast<double>(i) * 0.05);
    return grid;
}

double tune_threshold(std::span<const EnsembleSample> samples,
                      std::optional<std::size_t> member, std::span<const double> grid) {
    if (samples.empty()) {
        throw ValidationError("tune_threshold: no samples");
    }
    if (grid.empty()) {
        throw ValidationError("tune_threshold: empty threshold grid");
    }
    std::vector<Volume3D> targets;
    targets.reserve(samples.size());
    for (const EnsembleSample& s : samples) {
        if (member) {
            if (*member >= s.member_count()) {
                throw ValidationError("tune_threshold: member index " +
                                      std::to_string(*member) + " out of range");
            }
            targets.push_back(s.member_probs[*member]);
        } else {
            targets.push_back(ensemble_mean(s.member_probs));
        }
    }
    double best_threshold = grid[0];
    double best_score = -1.0;
    for (double t : grid) {
        double sum = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            sum += dsc(binarize(targets[i], t), samples[i].ground_truth,
                       samples[i].brain_mask);
        }
        const double mean = sum / static_cast<double>(samples.size());
        if (mean > best_score) {
            best_score = mean;
            best_threshold = t;
        }
    }
    return best_threshold;
}

namespace {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

bool wants(const std::vector<LesionMeasure>& measures, LesionMeasure::Kind kind) {
    return std::any_of(measures.begin(), measures.end(),
                       [&](const LesionMeasure& m) { return m.kind == kind; });
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

} // namespace

PatientEval evaluate_patient(const EnsembleSample& sample, const PipelineConfig& config,
                             const std::vector<double>& member_thresholds) {
    PatientEval eval;
    eval.patient_id = sample.patient_id;

    const Volume3D mean_map = ensemble_mean(sample.member_probs);
    const Volume3D prediction = binarize(mean_map, config.ensemble_threshold);

    // Voxel maps needed for DSC curves plus lesion-scale aggregation.
    std::set<VoxelMeasure> needed(config.voxel_measures.begin(), config.voxel_measures.end());
    for (const LesionMeasure& m : config.lesion_measures) {
        if (m.kind == LesionMeasure::Kind::mean || m.kind == LesionMeasure::Kind::logsum) {
            needed.insert(m.base);
        }
    }
    const UncertaintyMaps umaps = compute_voxel_uncertainties(sample, needed);

    for (VoxelMeasure m : config.voxel_measures) {
        eval.dsc_curves[std::string(to_token(m))] = dsc_retention_curve(
            prediction, sample.ground_truth, sample.brain_mask, umaps.at(m), config.tau);
    }
    const Volume3D ideal_map = ideal_voxel_uncertainty(prediction, sample.ground_truth);
    eval.dsc_curves["ideal"] =
        dsc_retention_curve(prediction, sample.ground_truth, sample.brain_mask,
                            as_doubles(ideal_map), config.tau);
    const Volume3D random_map = random_voxel_uncertainty(
        sample.shape(),
        rng::derive(rng::derive(config.seed, "voxel-random"), sample.patient_id));
    eval.dsc_curves["random"] =
        dsc_retention_curve(prediction, sample.ground_truth, sample.brain_mask,
                            as_doubles(random_map), config.tau);

    const LesionSet predicted = connected_components(prediction, config.connectivity);
    const LesionSet truth = connected_components(sample.ground_truth, config.connectivity);
    eval.classification = classify_lesions(predicted, truth, config.gamma, config.fn_mode);
    eval.predicted_lesions = predicted.count();
    eval.lesion_verdicts = eval.classification.predicted;

    std::vector<LesionSet> ddu_sets;
    if (wants(config.lesion_measures, LesionMeasure::Kind::ddu)) {
        for (const Volume3D& m : sample.member_probs) {
            ddu_sets.push_back(connected_components(binarize(m, config.ensemble_threshold),
                                                    config.connectivity));
        }
    }
    std::vector<LesionSet> ddu_true_sets;
    if (wants(config.lesion_measures, LesionMeasure::Kind::ddu_true)) {
        if (member_thresholds.size() != sample.member_count()) {
            throw ValidationError("ddu-true needs one threshold per member");
        }
        for (std::size_t k = 0; k < sample.member_count(); ++k) {
            ddu_true_sets.push_back(connected_components(
                binarize(sample.member_probs[k], member_thresholds[k]), config.connectivity));
        }
    }

    auto scores_for = [&](const LesionMeasure& m) -> std::vector<double> {
        std::vector<double> scores;
        scores.reserve(predicted.count());
        switch (m.kind) {
        case LesionMeasure::Kind::mean:
            for (const LesionComponent& c : predicted.components) {
                scores.push_back(aggregate_mean(c, umaps.at(m.base)));
            }
            break;
        case LesionMeasure::Kind::logsum: {
            // NC lives in [-1,-0.5]; shift into the log domain first.
            const double shift = m.base == VoxelMeasure::nc ? 1.0 : 0.0;
            for (const LesionComponent& c : predicted.components) {
                scores.push_back(aggregate_logsum(c, umaps.at(m.base), shift));
            }
            break;
        }
        case LesionMeasure::Kind::ddu:
            for (const LesionComponent& c : predicted.components) {
                scores.push_back(ddu(c, ddu_sets));
            }
            break;
        case LesionMeasure::Kind::ddu_true:
            for (const LesionComponent& c : predicted.components) {
                scores.push_back(ddu(c, ddu_true_sets));
            }
            break;
        case LesionMeasure::Kind::ideal:
            scores = ideal_lesion_uncertainty(eval.classification);
            break;
        case LesionMeasure::Kind::random:
            scores = random_lesion_uncertainty(predicted.count(), config.seed,
                                               sample.patient_id);
            break;
        }
        return scores;
    };

    std::vector<LesionMeasure> lesion_list = config.lesion_measures;
    lesion_list.push_back({LesionMeasure::Kind::ideal, VoxelMeasure::eoe});
    lesion_list.push_back({LesionMeasure::Kind::random, VoxelMeasure::eoe});
    for (const LesionMeasure& m : lesion_list) {
        const std::string token = to_token(m);
        if (eval.f1_curves.count(token)) continue;
        std::vector<double> scores = scores_for(m);
        eval.f1_curves[token] = f1_retention_curve(eval.classification, scores);
        eval.lesion_scores[token] = std::move(scores);
    }
    return eval;
}

std::vector<double> resolve_member_thresholds(const PipelineConfig& config,
                                              std::span<const EnsembleSample> samples) {
    if (config.member_thresholds) {
        return *config.member_thresholds;
    }
    if (samples.empty()) {
        throw ValidationError("cannot tune member thresholds without samples");
    }
    const std::vector<double> grid = default_threshold_grid();
    std::vector<double> thresholds;
    thresholds.reserve(samples.front().member_count());
    for (std::size_t k = 0; k < samples.front().member_count(); ++k) {
        thresholds.push_back(tune_threshold(samples, k, grid));
    }
    return thresholds;
}

namespace {

ScaleReport build_scale_report(const std::vector<std::string>& tokens,
                               const std::vector<std::string>& patient_ids,
                               const std::vector<const std::map<std::string, RetentionCurve>*>&
                                   patient_curves,
                               const PipelineConfig& config, std::string_view scale_tag) {
    const std::vector<double> grid = uniform_grid(config.grid_size);
    ScaleReport report;
    for (const std::string& token : tokens) {
        std::vector<std::pair<std::string, RetentionCurve>> curves;
        curves.reserve(patient_ids.size());
        for (std::size_t p = 0; p < patient_ids.size(); ++p) {
            curves.emplace_back(patient_ids[p], patient_curves[p]->at(token));
        }
        CurveBundle bundle = average_curves(curves, grid);

        MeasureRow row;
        row.measure = token;
        row.mean_auc = bundle.mean_auc;
        row.mean_curve = std::move(bundle.mean_curve);
        std::vector<double> aucs;
        aucs.reserve(bundle.per_patient.size());
        for (const auto& [id, curve] : bundle.per_patient) {
            row.per_patient_auc[id] = curve.auc;
            aucs.push_back(curve.auc);
        }
        const std::size_t sample_size =
            std::min(config.bootstrap_sample_size, aucs.size());
        row.se = bootstrap_se(aucs, sample_size, config.bootstrap_repetitions,
                              rng::derive(rng::derive(config.seed, scale_tag), token))
                     .standard_error;
        report.rows.push_back(std::move(row));
    }

    std::sort(report.rows.begin(), report.rows.end(),
              [](const MeasureRow& a, const MeasureRow& b) {
                  if (a.mean_auc != b.mean_auc) return a.mean_auc > b.mean_auc;
                  const auto rank = [](const MeasureRow& r) {
                      if (r.measure == "ideal") return 0;
                      if (r.measure == "random") return 2;
                      return 1;
                  };
                  if (rank(a) != rank(b)) return rank(a) < rank(b);
                  return a.measure < b.measure;
              });

    // Paired one-sided tests: best non-baseline measure against the others.
    const MeasureRow* top = nullptr;
    for (const MeasureRow& row : report.rows) {
        if (row.measure != "ideal" && row.measure != "random") {
            top = &row;
            break;
        }
    }
    if (top) {
        for (const MeasureRow& row : report.rows) {
            if (&row == top || row.measure == "ideal" || row.measure == "random") continue;
            std::vector<double> a, b;
            for (const auto& [id, auc] : top->per_patient_auc) {
                a.push_back(auc);
                b.push_back(row.per_patient_auc.at(id));
            }
            try {
                WilcoxonComparison cmp;
                cmp.first = top->measure;
                cmp.second = row.measure;
                cmp.result = wilcoxon_one_sided(a, b);
                report.tests.push_back(std::move(cmp));
            } catch (const ValidationError&) {
                // identical AUCs leave the test undefined; skip the pair
            }
        }
    }
    return report;
}

} // namespace

const MeasureRow* ScaleReport::find(std::string_view measure) const {
    for (const MeasureRow& row : rows) {
        if (row.measure == measure) return &row;
    }
    return nullptr;
}

MeasureReport run_pipeline(const PipelineConfig& config) {
    const std::vector<EnsembleSample> samples = load_manifest(config.manifest);
    validate_config(config, samples.front().member_count());

    PipelineConfig resolved = config;
    if (resolved.voxel_measures.empty()) {
        resolved.voxel_measures.assign(kAllVoxelMeasures.begin(), kAllVoxelMeasures.end());
    }
    if (resolved.lesion_measures.empty()) {
        resolved.lesion_measures = all_lesion_measures();
    }
    const std::vector<double> member_thresholds =
        wants(resolved.lesion_measures, LesionMeasure::Kind::ddu_true)
            ? resolve_member_thresholds(resolved, samples)
            : (resolved.member_thresholds ? *resolved.member_thresholds
                                          : std::vector<double>{});

    std::vector<PatientEval> evals(samples.size());
    parallel_for(samples.size(), resolved.threads, [&](std::size_t i) {
        evals[i] = evaluate_patient(samples[i], resolved, member_thresholds);
    });

    MeasureReport report;
    report.tool_version = std::string(kToolVersion);
    report.seed = resolved.seed;
    const json config_json = config_to_json(resolved);
    report.config_dump = config_json.dump();
    report.config_hash = hex64(rng::fnv1a(report.config_dump));
    for (const EnsembleSample& s : samples) report.patients.push_back(s.patient_id);

    const auto push_unique = [](std::vector<std::string>& tokens, std::string token) {
        if (std::find(tokens.begin(), tokens.end(), token) == tokens.end()) {
            tokens.push_back(std::move(token));
        }
    };
    std::vector<std::string> dsc_tokens;
    for (VoxelMeasure m : resolved.voxel_measures) {
        push_unique(dsc_tokens, std::string(to_token(m)));
    }
    push_unique(dsc_tokens, "ideal");
    push_unique(dsc_tokens, "random");

    std::vector<std::string> f1_tokens;
    for (const LesionMeasure& m : resolved.lesion_measures) {
        push_unique(f1_tokens, to_token(m));
    }
    push_unique(f1_tokens, "ideal");
    push_unique(f1_tokens, "random");

    std::vector<const std::map<std::string, RetentionCurve>*> dsc_curves;
    std::vector<std::string> dsc_patients;
    for (const PatientEval& e : evals) {
        dsc_curves.push_back(&e.dsc_curves);
        dsc_patients.push_back(e.patient_id);
    }
    report.dsc_rc =
        build_scale_report(dsc_tokens, dsc_patients, dsc_curves, resolved, "bootstrap-dsc");

    std::vector<const std::map<std::string, RetentionCurve>*> f1_curves;
    std::vector<std::string> f1_patients;
    for (const PatientEval& e : evals) {
        if (resolved.skip_empty && e.predicted_lesions == 0) continue;
        f1_curves.push_back(&e.f1_curves);
        f1_patients.push_back(e.patient_id);
    }
    if (f1_patients.empty()) {
        throw ValidationError("no patients with predicted lesions (skip_empty dropped all)");
    }
    report.f1_rc =
        build_scale_report(f1_tokens, f1_patients, f1_curves, resolved, "bootstrap-f1");
    return report;
}

} // namespace uqeval
