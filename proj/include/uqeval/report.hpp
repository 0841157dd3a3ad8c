#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "uqeval/pipeline.hpp"

namespace uqeval {

// Shortest round-trip decimal representation, locale-independent.
std::string format_double(double value);

nlohmann::json report_to_json(const MeasureReport& report);
MeasureReport report_from_json(const nlohmann::json& j);
MeasureReport load_report(const std::filesystem::path& json_path);

struct EmitOptions {
    bool json = true;
    bool svg = true;
    bool timestamp = true; // "generated_at" field in report.json
};

// Writes report.json, report.csv, curves.csv and (optionally) curves.svg.
void emit_report(const MeasureReport& report, const std::filesystem::path& out_dir,
                 const EmitOptions& options = {});

// curves.csv body for the dataset-mean curves (scale,measure,fraction,value).
std::string curves_csv(const MeasureReport& report);

// report.csv body (scale,measure,mean_auc,se).
std::string report_csv(const MeasureReport& report);

// Minimal polyline plot of the mean curves, one series per measure.
std::string curves_svg(const MeasureReport& report);

} // namespace uqeval
