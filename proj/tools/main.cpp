// uqeval command-line tool: synthetic data generation, uncertainty maps,
// segmentation, lesion analysis, retention curves, statistics and the full
// evaluation pipeline.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "uqeval/manifest.hpp"
#include "uqeval/npy_io.hpp"
#include "uqeval/pipeline.hpp"
#include "uqeval/report.hpp"
#include "uqeval/rng.hpp"
#include "uqeval/stats.hpp"
#include "uqeval/synthetic.hpp"

namespace {

using namespace uqeval;
using nlohmann::json;

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<VoxelMeasure> parse_voxel_measures(const std::string& csv) {
    std::vector<VoxelMeasure> out;
    for (const std::string& token : split_csv(csv)) {
        out.push_back(voxel_measure_from_token(token));
    }
    return out;
}

std::vector<LesionMeasure> parse_lesion_measures(const std::string& csv) {
    std::vector<LesionMeasure> out;
    for (const std::string& token : split_csv(csv)) {
        out.push_back(lesion_measure_from_token(token));
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    for (const std::string& token : split_csv(csv)) {
        out.push_back(std::stod(token));
    }
    return out;
}

// Per-measure per-patient AUCs from report.json, an rc companion file, or a
// bare {"measures": {token: {patient: auc}}} object.
std::map<std::string, std::map<std::string, double>> load_aucs(
    const std::filesystem::path& path, const std::string& scale) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
    std::map<std::string, std::map<std::string, double>> out;
    try {
        if (j.contains("dsc_rc") || j.contains("f1_rc")) {
            const std::string key = scale + "_rc";
            if (!j.contains(key)) {
                throw ValidationError(path.string() + ": no '" + key + "' section");
            }
            for (const json& row : j.at(key).at("rows")) {
                out[row.at("measure").get<std::string>()] =
                    row.at("per_patient_auc").get<std::map<std::string, double>>();
            }
        } else if (j.contains("measures")) {
            for (const auto& [token, aucs] : j.at("measures").items()) {
                out[token] = aucs.get<std::map<std::string, double>>();
            }
        } else if (j.contains("aucs") && j.contains("measure")) {
            out[j.at("measure").get<std::string>()] =
                j.at("aucs").get<std::map<std::string, double>>();
        } else {
            throw ValidationError(path.string() + ": unrecognized AUC file layout");
        }
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return out;
}

std::vector<double> aligned_values(const std::map<std::string, double>& per_patient) {
    std::vector<double> out;
    out.reserve(per_patient.size());
    for (const auto& [id, v] : per_patient) out.push_back(v);
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << body;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
    std::string out;
    SynthSpec spec;
    std::vector<std::size_t> shape;
    double spurious_miss = -1.0;
    long long miss_member = -1;
    std::uint64_t seed = 0;
};

void add_synth(CLI::App& app, SynthArgs& args) {
    CLI::App* cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--patients", args.spec.patients, "number of patients");
    cmd->add_option("--shape", args.shape, "volume shape: depth height width")
        ->expected(3);
    cmd->add_option("--members", args.spec.member_count, "ensemble size K");
    cmd->add_option("--lesions-min", args.spec.lesion_count_min, "min true lesions");
    cmd->add_option("--lesions-max", args.spec.lesion_count_max, "max true lesions");
    cmd->add_option("--lesion-radius-min", args.spec.lesion_radius_min, "min lesion radius");
    cmd->add_option("--lesion-radius-max", args.spec.lesion_radius_max, "max lesion radius");
    cmd->add_option("--spurious-min", args.spec.spurious_count_min, "min spurious blobs");
    cmd->add_option("--spurious-max", args.spec.spurious_count_max, "max spurious blobs");
    cmd->add_option("--spurious-radius-min", args.spec.spurious_radius_min,
                    "min spurious radius");
    cmd->add_option("--spurious-radius-max", args.spec.spurious_radius_max,
                    "max spurious radius");
    cmd->add_option("--noise", args.spec.member_noise, "per-member uniform noise level");
    cmd->add_option("--miss", args.spec.miss_probability,
                    "per-member dropout probability for true lesions");
    cmd->add_option("--spurious-miss", args.spurious_miss,
                    "per-member dropout probability for spurious blobs");
    cmd->add_option("--miss-member", args.miss_member,
                    "restrict dropouts to this member index");
    cmd->add_option("--smoothing", args.spec.smoothing_passes, "blur passes");
    cmd->add_flag("--brain-mask", args.spec.write_brain_mask, "write ellipsoidal brain masks");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->callback([&args]() {
        if (!args.shape.empty()) {
            args.spec.shape = Shape{args.shape[0], args.shape[1], args.shape[2]};
        }
        if (args.spurious_miss >= 0.0) {
            args.spec.spurious_miss_probability = args.spurious_miss;
        }
        if (args.miss_member >= 0) {
            args.spec.miss_member_only = static_cast<std::size_t>(args.miss_member);
        }
        const DatasetManifest manifest = synth_generate(args.spec, args.seed, args.out);
        std::cout << "wrote " << manifest.samples.size() << " patients to " << args.out
                  << "\n";
    });
}

// ---------------------------------------------------------- uncertainty ----

struct UncertaintyArgs {
    std::string manifest;
    std::string out;
    std::string measures = "eoe,nc,exe,mi,epkl,rmi";
    double threshold = 0.3;
    std::uint64_t seed = 0;
};

void add_uncertainty(CLI::App& app, UncertaintyArgs& args) {
    CLI::App* cmd = app.add_subcommand("uncertainty", "write voxel uncertainty maps");
    cmd->add_option("--manifest", args.manifest, "dataset manifest")->required();
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--measures", args.measures,
                    "comma-separated measures (eoe,nc,exe,mi,epkl,rmi,ideal,random)");
    cmd->add_option("--threshold", args.threshold, "ensemble threshold for the ideal map");
    cmd->add_option("--seed", args.seed, "seed for the random map");
    cmd->callback([&args]() {
        std::filesystem::create_directories(args.out);
        const std::vector<std::string> tokens = split_csv(args.measures);
        std::set<VoxelMeasure> measures;
        bool want_ideal = false, want_random = false;
        for (const std::string& t : tokens) {
            if (t == "ideal") {
                want_ideal = true;
            } else if (t == "random") {
                want_random = true;
            } else {
                measures.insert(voxel_measure_from_token(t));
            }
        }
        const std::vector<EnsembleSample> samples = load_manifest(args.manifest);
        for (const EnsembleSample& sample : samples) {
            const UncertaintyMaps maps = compute_voxel_uncertainties(sample, measures);
            for (VoxelMeasure m : measures) {
                const std::string name =
                    sample.patient_id + "_" + std::string(to_token(m)) + ".npy";
                save_array(maps.to_volume(m), std::filesystem::path(args.out) / name);
            }
            if (want_ideal) {
                const Volume3D pred =
                    binarize(ensemble_mean(sample.member_probs), args.threshold);
                save_array(ideal_voxel_uncertainty(pred, sample.ground_truth),
                           std::filesystem::path(args.out) /
                               (sample.patient_id + "_ideal.npy"));
            }
            if (want_random) {
                save_array(
                    random_voxel_uncertainty(
                        sample.shape(), rng::derive(rng::derive(args.seed, "voxel-random"),
                                                    sample.patient_id)),
                    std::filesystem::path(args.out) / (sample.patient_id + "_random.npy"));
            }
        }
        std::cout << "wrote maps for " << samples.size() << " patients to " << args.out
                  << "\n";
    });
}

// --------------------------------------------------------------- segment ----

struct SegmentArgs {
    std::string manifest;
    std::string out;
    double threshold = 0.3;
    long long member = -1;
};

void add_segment(CLI::App& app, SegmentArgs& args) {
    CLI::App* cmd = app.add_subcommand("segment", "binarize ensemble or member maps");
    cmd->add_option("--manifest", args.manifest, "dataset manifest")->required();
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--threshold", args.threshold, "probability threshold");
    cmd->add_option("--member", args.member, "binarize this member instead of the mean");
    cmd->callback([&args]() {
        std::filesystem::create_directories(args.out);
        const std::vector<EnsembleSample> samples = load_manifest(args.manifest);
        for (const EnsembleSample& sample : samples) {
            Volume3D target = args.member >= 0
                                  ? sample.member_probs.at(static_cast<std::size_t>(args.member))
                                  : ensemble_mean(sample.member_probs);
            const std::string name =
                args.member >= 0
                    ? sample.patient_id + "_m" + std::to_string(args.member) + "_pred.npy"
                    : sample.patient_id + "_pred.npy";
            save_array(binarize(target, args.threshold),
                       std::filesystem::path(args.out) / name);
        }
        std::cout << "wrote predictions for " << samples.size() << " patients to "
                  << args.out << "\n";
    });
}

// -------------------------------------------------------- tune-threshold ----

struct TuneArgs {
    std::string manifest;
    long long member = -1;
    double step = 0.05;
};

void add_tune(CLI::App& app, TuneArgs& args) {
    CLI::App* cmd = app.add_subcommand("tune-threshold",
                                       "pick the Dice-optimal binarization threshold");
    cmd->add_option("--manifest", args.manifest, "dataset manifest")->required();
    cmd->add_option("--member", args.member, "tune for this member instead of the mean");
    cmd->add_option("--step", args.step, "grid step in (0,0.5)");
    cmd->callback([&args]() {
        if (!(args.step > 0.0 && args.step < 0.5)) {
            throw ValidationError("step must lie in (0,0.5)");
        }
        std::vector<double> grid;
        for (double t = args.step; t < 1.0 - args.step / 2.0; t += args.step) {
            grid.push_back(t);
        }
        const std::vector<EnsembleSample> samples = load_manifest(args.manifest);
        const std::optional<std::size_t> member =
            args.member >= 0 ? std::optional<std::size_t>(static_cast<std::size_t>(args.member))
                             : std::nullopt;
        std::cout << format_double(tune_threshold(samples, member, grid)) << "\n";
    });
}

// --------------------------------------------------------------- lesions ----

struct LesionsArgs {
    std::string manifest;
    std::string out;
    std::string measures;
    std::string member_thresholds;
    std::string fn_mode = "zero-overlap";
    double gamma = 0.25;
    double threshold = 0.3;
    int connectivity = 26;
    std::uint64_t seed = 0;
};

void add_lesions(CLI::App& app, LesionsArgs& args) {
    CLI::App* cmd = app.add_subcommand("lesions", "lesion extraction, matching and scoring");
    cmd->add_option("--manifest", args.manifest, "dataset manifest")->required();
    cmd->add_option("--out", args.out, "output JSON path")->required();
    cmd->add_option("--measures", args.measures,
                    "comma-separated lesion measures (default: all + ideal + random)");
    cmd->add_option("--gamma", args.gamma, "IoU detection threshold");
    cmd->add_option("--connectivity", args.connectivity, "6, 18 or 26");
    cmd->add_option("--fn-mode", args.fn_mode, "zero-overlap or unmatched");
    cmd->add_option("--threshold", args.threshold, "ensemble probability threshold");
    cmd->add_option("--member-thresholds", args.member_thresholds,
                    "comma-separated per-member thresholds for ddu-true");
    cmd->add_option("--seed", args.seed, "seed for random scores");
    cmd->callback([&args]() {
        PipelineConfig config;
        config.manifest = args.manifest;
        config.ensemble_threshold = args.threshold;
        config.gamma = args.gamma;
        config.connectivity = connectivity_from_int(args.connectivity);
        config.fn_mode = fn_mode_from_string(args.fn_mode);
        config.seed = args.seed;
        config.lesion_measures = args.measures.empty() ? all_lesion_measures()
                                                       : parse_lesion_measures(args.measures);
        if (!args.member_thresholds.empty()) {
            config.member_thresholds = parse_doubles(args.member_thresholds);
        }
        const std::vector<EnsembleSample> samples = load_manifest(config.manifest);
        validate_config(config, samples.front().member_count());
        const bool needs_true = std::any_of(
            config.lesion_measures.begin(), config.lesion_measures.end(),
            [](const LesionMeasure& m) { return m.kind == LesionMeasure::Kind::ddu_true; });
        const std::vector<double> member_thresholds =
            needs_true ? resolve_member_thresholds(config, samples) : std::vector<double>{};

        json patients = json::array();
        for (const EnsembleSample& sample : samples) {
            const PatientEval eval = evaluate_patient(sample, config, member_thresholds);
            json lesions = json::array();
            for (std::size_t i = 0; i < eval.lesion_verdicts.size(); ++i) {
                const LesionVerdict& v = eval.lesion_verdicts[i];
                json scores;
                for (const auto& [token, values] : eval.lesion_scores) {
                    scores[token] = values[i];
                }
                lesions.push_back({{"label", v.label},
                                   {"size", v.size},
                                   {"status", v.status == LesionStatus::tp ? "TP" : "FP"},
                                   {"best_iou", v.best_iou},
                                   {"scores", scores}});
            }
            patients.push_back({{"patient_id", sample.patient_id},
                                {"fn_count", eval.classification.fn_count},
                                {"lesions", lesions}});
        }
        json out;
        out["gamma"] = args.gamma;
        out["connectivity"] = args.connectivity;
        out["fn_mode"] = args.fn_mode;
        out["ensemble_threshold"] = args.threshold;
        if (!member_thresholds.empty()) out["member_thresholds"] = member_thresholds;
        out["patients"] = patients;
        write_text(args.out, out.dump(2) + "\n");
        std::cout << "wrote lesion report for " << samples.size() << " patients to "
                  << args.out << "\n";
    });
}

// -------------------------------------------------------------------- rc ----

struct RcArgs {
    std::string manifest;
    std::string measure;
    std::string out;
    std::string auc_out;
    std::string member_thresholds;
    std::string fn_mode = "zero-overlap";
    double tau = 2.5e-3;
    double gamma = 0.25;
    double threshold = 0.3;
    int connectivity = 26;
    std::size_t grid = 101;
    bool skip_empty = false;
    std::uint64_t seed = 0;
};

void add_rc_options(CLI::App* cmd, RcArgs& args) {
    cmd->add_option("--manifest", args.manifest, "dataset manifest")->required();
    cmd->add_option("--measure", args.measure, "measure token")->required();
    cmd->add_option("--out", args.out, "curves CSV path")->required();
    cmd->add_option("--auc-out", args.auc_out, "companion AUC JSON path");
    cmd->add_option("--tau", args.tau, "retention step fraction");
    cmd->add_option("--gamma", args.gamma, "IoU detection threshold");
    cmd->add_option("--grid", args.grid, "interpolation grid nodes");
    cmd->add_option("--threshold", args.threshold, "ensemble probability threshold");
    cmd->add_option("--connectivity", args.connectivity, "6, 18 or 26");
    cmd->add_option("--fn-mode", args.fn_mode, "zero-overlap or unmatched");
    cmd->add_option("--member-thresholds", args.member_thresholds,
                    "comma-separated per-member thresholds for ddu-true");
    cmd->add_flag("--skip-empty", args.skip_empty, "drop patients without predicted lesions");
    cmd->add_option("--seed", args.seed, "seed for random baselines");
}

void run_rc(const RcArgs& args, bool voxel_scale) {
    PipelineConfig config;
    config.manifest = args.manifest;
    config.ensemble_threshold = args.threshold;
    config.tau = args.tau;
    config.gamma = args.gamma;
    config.connectivity = connectivity_from_int(args.connectivity);
    config.fn_mode = fn_mode_from_string(args.fn_mode);
    config.grid_size = args.grid;
    config.seed = args.seed;
    config.skip_empty = args.skip_empty;
    if (!args.member_thresholds.empty()) {
        config.member_thresholds = parse_doubles(args.member_thresholds);
    }
    std::string token = args.measure;
    std::replace(token.begin(), token.end(), '_', '-');
    if (voxel_scale) {
        if (token != "ideal" && token != "random") {
            config.voxel_measures = {voxel_measure_from_token(token)};
        }
    } else {
        if (token != "ideal" && token != "random") {
            config.lesion_measures = {lesion_measure_from_token(token)};
        }
    }

    const std::vector<EnsembleSample> samples = load_manifest(config.manifest);
    validate_config(config, samples.front().member_count());
    const bool needs_true = std::any_of(
        config.lesion_measures.begin(), config.lesion_measures.end(),
        [](const LesionMeasure& m) { return m.kind == LesionMeasure::Kind::ddu_true; });
    const std::vector<double> member_thresholds =
        needs_true ? resolve_member_thresholds(config, samples) : std::vector<double>{};

    std::vector<std::pair<std::string, RetentionCurve>> curves;
    for (const EnsembleSample& sample : samples) {
        PatientEval eval = evaluate_patient(sample, config, member_thresholds);
        if (!voxel_scale && args.skip_empty && eval.predicted_lesions == 0) continue;
        auto& source = voxel_scale ? eval.dsc_curves : eval.f1_curves;
        curves.emplace_back(sample.patient_id, std::move(source.at(token)));
    }
    if (curves.empty()) {
        throw ValidationError("no patients left for the retention curve");
    }
    const std::vector<double> grid = uniform_grid(config.grid_size);
    const CurveBundle bundle = average_curves(curves, grid);

    std::string csv = "patient_id,fraction,value\n";
    for (const auto& [id, curve] : bundle.per_patient) {
        for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
            csv += id + "," + format_double(curve.fractions[i]) + "," +
                   format_double(curve.values[i]) + "\n";
        }
    }
    for (std::size_t i = 0; i < bundle.mean_curve.fractions.size(); ++i) {
        csv += "MEAN," + format_double(bundle.mean_curve.fractions[i]) + "," +
               format_double(bundle.mean_curve.values[i]) + "\n";
    }
    write_text(args.out, csv);

    json aucs;
    for (const auto& [id, curve] : bundle.per_patient) {
        aucs[id] = curve.auc;
    }
    json companion;
    companion["scale"] = voxel_scale ? "dsc" : "f1";
    companion["measure"] = token;
    companion["grid_size"] = config.grid_size;
    companion["mean_auc"] = bundle.mean_auc;
    companion["aucs"] = aucs;
    std::filesystem::path auc_path = args.auc_out.empty()
                                         ? std::filesystem::path(args.out).replace_extension(
                                               ".aucs.json")
                                         : std::filesystem::path(args.auc_out);
    write_text(auc_path, companion.dump(2) + "\n");
    std::cout << "mean " << (voxel_scale ? "DSC" : "F1") << "-AUC(" << token
              << ") = " << format_double(bundle.mean_auc) << " over " << curves.size()
              << " patients\n";
}

void add_rc(CLI::App& app, RcArgs& dsc_args, RcArgs& f1_args) {
    CLI::App* cmd = app.add_subcommand("rc", "build retention curves");
    cmd->require_subcommand(1);
    CLI::App* dsc_cmd = cmd->add_subcommand("dsc", "voxel-scale Dice retention curve");
    add_rc_options(dsc_cmd, dsc_args);
    dsc_cmd->callback([&dsc_args]() { run_rc(dsc_args, true); });
    CLI::App* f1_cmd = cmd->add_subcommand("f1", "lesion-scale F1 retention curve");
    add_rc_options(f1_cmd, f1_args);
    f1_cmd->callback([&f1_args]() { run_rc(f1_args, false); });
}

// ----------------------------------------------------------------- stats ----

struct StatsArgs {
    std::string in;
    std::string scale = "f1";
    std::string measure;
    std::string first;
    std::string second;
    std::size_t sample_size = 50;
    std::size_t reps = 10000;
    std::size_t exact_threshold = 20;
    std::uint64_t seed = 0;
};

void add_stats(CLI::App& app, StatsArgs& args) {
    CLI::App* cmd = app.add_subcommand("stats", "bootstrap and paired tests on AUCs");
    cmd->require_subcommand(1);

    CLI::App* boot = cmd->add_subcommand("bootstrap", "bootstrap standard errors");
    boot->add_option("--in", args.in, "report.json or AUC JSON")->required();
    boot->add_option("--scale", args.scale, "dsc or f1 (for report.json input)");
    boot->add_option("--measure", args.measure, "restrict to one measure token");
    boot->add_option("--sample-size", args.sample_size, "resample size");
    boot->add_option("--reps", args.reps, "bootstrap repetitions");
    boot->add_option("--seed", args.seed, "random seed");
    boot->callback([&args]() {
        const auto aucs = load_aucs(args.in, args.scale);
        json out = json::array();
        for (const auto& [token, per_patient] : aucs) {
            if (!args.measure.empty() && token != args.measure) continue;
            const std::vector<double> values = aligned_values(per_patient);
            const std::size_t size = std::min(args.sample_size, values.size());
            const BootstrapResult r = bootstrap_se(values, size, args.reps, args.seed);
            out.push_back({{"measure", token},
                           {"mean", r.mean},
                           {"standard_error", r.standard_error},
                           {"sample_size", r.sample_size},
                           {"repetitions", r.repetitions},
                           {"seed", r.seed}});
        }
        if (out.empty()) {
            throw ValidationError("no matching measures in " + args.in);
        }
        std::cout << out.dump(2) << "\n";
    });

    CLI::App* wil = cmd->add_subcommand("wilcoxon", "one-sided paired signed-rank test");
    wil->add_option("--in", args.in, "report.json or AUC JSON")->required();
    wil->add_option("--scale", args.scale, "dsc or f1 (for report.json input)");
    wil->add_option("--first", args.first, "measure expected to be greater")->required();
    wil->add_option("--second", args.second, "measure compared against")->required();
    wil->add_option("--exact-threshold", args.exact_threshold,
                    "max n for the exact p-value");
    wil->callback([&args]() {
        const auto aucs = load_aucs(args.in, args.scale);
        std::string first = args.first, second = args.second;
        std::replace(first.begin(), first.end(), '_', '-');
        std::replace(second.begin(), second.end(), '_', '-');
        if (!aucs.count(first)) throw ValidationError("measure '" + first + "' not in input");
        if (!aucs.count(second)) throw ValidationError("measure '" + second + "' not in input");
        std::vector<double> a, b;
        for (const auto& [id, v] : aucs.at(first)) {
            auto it = aucs.at(second).find(id);
            if (it == aucs.at(second).end()) {
                throw ValidationError("patient '" + id + "' missing for '" + second + "'");
            }
            a.push_back(v);
            b.push_back(it->second);
        }
        const WilcoxonResult r = wilcoxon_one_sided(a, b, args.exact_threshold);
        json out = {{"first", first},
                    {"second", second},
                    {"alternative", "greater"},
                    {"statistic", r.statistic},
                    {"p_value", r.p_value},
                    {"n_effective", r.n_effective},
                    {"exact", r.exact}};
        std::cout << out.dump(2) << "\n";
    });
}

// ---------------------------------------------------------------- report ----

struct ReportArgs {
    std::string in;
    std::string out_dir;
    bool no_svg = false;
};

void add_report(CLI::App& app, ReportArgs& args) {
    CLI::App* cmd = app.add_subcommand("report", "re-render CSV/SVG from report.json");
    cmd->add_option("--in", args.in, "report.json path")->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory")->required();
    cmd->add_flag("--no-svg", args.no_svg, "skip the SVG plot");
    cmd->callback([&args]() {
        const MeasureReport report = load_report(args.in);
        EmitOptions options;
        options.json = false;
        options.svg = !args.no_svg;
        emit_report(report, args.out_dir, options);
        std::cout << "rendered report files to " << args.out_dir << "\n";
    });
}

// ------------------------------------------------------------------- run ----

struct RunArgs {
    std::string manifest;
    std::string config_file;
    std::string out_dir = "out";
    std::string voxel_measures;
    std::string lesion_measures;
    std::string member_thresholds;
    std::string fn_mode;
    double threshold = 0.3;
    double tau = 2.5e-3;
    double gamma = 0.25;
    int connectivity = 26;
    std::size_t grid = 101;
    std::size_t bootstrap_sample_size = 50;
    std::size_t bootstrap_reps = 10000;
    bool skip_empty = false;
    bool no_svg = false;
    std::uint64_t seed = 0;
    int threads = 1;
};

void add_run(CLI::App& app, RunArgs& args) {
    CLI::App* cmd = app.add_subcommand("run", "full evaluation pipeline");
    auto* opt_manifest = cmd->add_option("--manifest", args.manifest, "dataset manifest");
    cmd->add_option("--config", args.config_file, "pipeline config JSON");
    cmd->add_option("--out", args.out_dir, "output directory");
    auto* opt_threshold = cmd->add_option("--threshold", args.threshold, "ensemble threshold");
    auto* opt_tau = cmd->add_option("--tau", args.tau, "retention step fraction");
    auto* opt_gamma = cmd->add_option("--gamma", args.gamma, "IoU detection threshold");
    auto* opt_conn = cmd->add_option("--connectivity", args.connectivity, "6, 18 or 26");
    auto* opt_grid = cmd->add_option("--grid", args.grid, "interpolation grid nodes");
    auto* opt_vm = cmd->add_option("--measures", args.voxel_measures,
                                   "comma-separated voxel measures");
    auto* opt_lm = cmd->add_option("--lesion-measures", args.lesion_measures,
                                   "comma-separated lesion measures");
    auto* opt_mt = cmd->add_option("--member-thresholds", args.member_thresholds,
                                   "comma-separated per-member thresholds");
    auto* opt_fn = cmd->add_option("--fn-mode", args.fn_mode, "zero-overlap or unmatched");
    auto* opt_bs = cmd->add_option("--bootstrap-sample-size", args.bootstrap_sample_size,
                                   "bootstrap resample size");
    auto* opt_br = cmd->add_option("--bootstrap-reps", args.bootstrap_reps,
                                   "bootstrap repetitions");
    auto* opt_skip = cmd->add_flag("--skip-empty", args.skip_empty,
                                   "drop patients without predicted lesions");
    auto* opt_seed = cmd->add_option("--seed", args.seed, "random seed");
    auto* opt_threads = cmd->add_option("--threads", args.threads, "worker threads");
    cmd->add_flag("--no-svg", args.no_svg, "skip the SVG plot");

    cmd->callback([&args, opt_manifest, opt_threshold, opt_tau, opt_gamma, opt_conn,
                   opt_grid, opt_vm, opt_lm, opt_mt, opt_fn, opt_bs, opt_br, opt_skip,
                   opt_seed, opt_threads]() {
        PipelineConfig config;
        if (!args.config_file.empty()) {
            std::ifstream in(args.config_file);
            if (!in) {
                throw IoError("cannot open config " + args.config_file);
            }
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw ValidationError(args.config_file + ": invalid JSON: " + e.what());
            }
            config = config_from_json(j);
        }
        if (opt_manifest->count()) config.manifest = args.manifest;
        if (opt_threshold->count()) config.ensemble_threshold = args.threshold;
        if (opt_tau->count()) config.tau = args.tau;
        if (opt_gamma->count()) config.gamma = args.gamma;
        if (opt_conn->count()) config.connectivity = connectivity_from_int(args.connectivity);
        if (opt_grid->count()) config.grid_size = args.grid;
        if (opt_vm->count()) config.voxel_measures = parse_voxel_measures(args.voxel_measures);
        if (opt_lm->count()) {
            config.lesion_measures = parse_lesion_measures(args.lesion_measures);
        }
        if (opt_mt->count()) config.member_thresholds = parse_doubles(args.member_thresholds);
        if (opt_fn->count()) config.fn_mode = fn_mode_from_string(args.fn_mode);
        if (opt_bs->count()) config.bootstrap_sample_size = args.bootstrap_sample_size;
        if (opt_br->count()) config.bootstrap_repetitions = args.bootstrap_reps;
        if (opt_skip->count()) config.skip_empty = args.skip_empty;
        if (opt_seed->count()) config.seed = args.seed;
        if (opt_threads->count()) config.threads = args.threads;
        if (config.manifest.empty()) {
            throw ValidationError("run needs --manifest or a config file with one");
        }

        const MeasureReport report = run_pipeline(config);
        EmitOptions options;
        options.svg = !args.no_svg;
        emit_report(report, args.out_dir, options);

        std::cout << "scale,measure,mean_auc,se\n";
        for (const MeasureRow& row : report.dsc_rc.rows) {
            std::cout << "dsc," << row.measure << "," << format_double(row.mean_auc) << ","
                      << format_double(row.se) << "\n";
        }
        for (const MeasureRow& row : report.f1_rc.rows) {
            std::cout << "f1," << row.measure << "," << format_double(row.mean_auc) << ","
                      << format_double(row.se) << "\n";
        }
        std::cout << "report written to " << args.out_dir << "\n";
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"uqeval: uncertainty evaluation for ensemble 3D segmentation"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    UncertaintyArgs uncertainty_args;
    SegmentArgs segment_args;
    TuneArgs tune_args;
    LesionsArgs lesions_args;
    RcArgs rc_dsc_args, rc_f1_args;
    StatsArgs stats_args;
    ReportArgs report_args;
    RunArgs run_args;

    add_synth(app, synth_args);
    add_uncertainty(app, uncertainty_args);
    add_segment(app, segment_args);
    add_tune(app, tune_args);
    add_lesions(app, lesions_args);
    add_rc(app, rc_dsc_args, rc_f1_args);
    add_stats(app, stats_args);
    add_report(app, report_args);
    add_run(app, run_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
