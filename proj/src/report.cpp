#include "uqeval/report.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

namespace uqeval {

using nlohmann::json;

std::string format_double(double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

namespace {

json curve_to_json(const RetentionCurve& curve) {
    json j;
    j["fractions"] = curve.fractions;
    j["values"] = curve.values;
    j["auc"] = curve.auc;
    return j;
}

RetentionCurve curve_from_json(const json& j) {
    return make_curve(j.at("fractions").get<std::vector<double>>(),
                      j.at("values").get<std::vector<double>>());
}

json scale_to_json(const ScaleReport& scale) {
    json rows = json::array();
    for (const MeasureRow& row : scale.rows) {
        json r;
        r["measure"] = row.measure;
        r["mean_auc"] = row.mean_auc;
        r["se"] = row.se;
        r["per_patient_auc"] = row.per_patient_auc;
        r["mean_curve"] = curve_to_json(row.mean_curve);
        rows.push_back(std::move(r));
    }
    json tests = json::array();
    for (const WilcoxonComparison& cmp : scale.tests) {
        json t;
        t["first"] = cmp.first;
        t["second"] = cmp.second;
        t["alternative"] = "greater";
        t["p_value"] = cmp.result.p_value;
        t["statistic"] = cmp.result.statistic;
        t["n_effective"] = cmp.result.n_effective;
        t["exact"] = cmp.result.exact;
        tests.push_back(std::move(t));
    }
    json j;
    j["rows"] = rows;
    j["wilcoxon"] = tests;
    return j;
}

ScaleReport scale_from_json(const json& j) {
    ScaleReport scale;
    for (const json& r : j.at("rows")) {
        MeasureRow row;
        row.measure = r.at("measure").get<std::string>();
        row.mean_auc = r.at("mean_auc").get<double>();
        row.se = r.at("se").get<double>();
        row.per_patient_auc =
            r.at("per_patient_auc").get<std::map<std::string, double>>();
        row.mean_curve = curve_from_json(r.at("mean_curve"));
        scale.rows.push_back(std::move(row));
    }
    for (const json& t : j.at("wilcoxon")) {
        WilcoxonComparison cmp;
        cmp.first = t.at("first").get<std::string>();
        cmp.second = t.at("second").get<std::string>();
        cmp.result.p_value = t.at("p_value").get<double>();
        cmp.result.statistic = t.at("statistic").get<double>();
        cmp.result.n_effective = t.at("n_effective").get<std::size_t>();
        cmp.result.exact = t.at("exact").get<bool>();
        scale.tests.push_back(std::move(cmp));
    }
    return scale;
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << body;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace

json report_to_json(const MeasureReport& report) {
    json j;
    j["schema_version"] = 1;
    j["tool"] = {{"name", "uqeval"}, {"version", report.tool_version}};
    j["seed"] = report.seed;
    j["config"] = json::parse(report.config_dump);
    j["config_hash"] = report.config_hash;
    j["patients"] = report.patients;
    j["dsc_rc"] = scale_to_json(report.dsc_rc);
    j["f1_rc"] = scale_to_json(report.f1_rc);
    return j;
}

MeasureReport report_from_json(const json& j) {
    MeasureReport report;
    try {
        report.tool_version = j.at("tool").at("version").get<std::string>();
        report.seed = j.at("seed").get<std::uint64_t>();
        report.config_dump = j.at("config").dump();
        report.config_hash = j.at("config_hash").get<std::string>();
        report.patients = j.at("patients").get<std::vector<std::string>>();
        report.dsc_rc = scale_from_json(j.at("dsc_rc"));
        report.f1_rc = scale_from_json(j.at("f1_rc"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid report JSON: ") + e.what());
    }
    return report;
}

MeasureReport load_report(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) {
        throw IoError("cannot open report " + json_path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("report " + json_path.string() + ": invalid JSON: " + e.what());
    }
    return report_from_json(j);
}

std::string report_csv(const MeasureReport& report) {
    std::string out = "scale,measure,mean_auc,se\n";
    const auto emit = [&](std::string_view scale, const ScaleReport& s) {
        for (const MeasureRow& row : s.rows) {
            out += std::string(scale) + "," + row.measure + "," +
                   format_double(row.mean_auc) + "," + format_double(row.se) + "\n";
        }
    };
    emit("dsc", report.dsc_rc);
    emit("f1", report.f1_rc);
    return out;
}

std::string curves_csv(const MeasureReport& report) {
    std::string out = "scale,measure,fraction,value\n";
    const auto emit = [&](std::string_view scale, const ScaleReport& s) {
        for (const MeasureRow& row : s.rows) {
            for (std::size_t i = 0; i < row.mean_curve.fractions.size(); ++i) {
                out += std::string(scale) + "," + row.measure + "," +
                       format_double(row.mean_curve.fractions[i]) + "," +
                       format_double(row.mean_curve.values[i]) + "\n";
            }
        }
    };
    emit("dsc", report.dsc_rc);
    emit("f1", report.f1_rc);
    return out;
}

namespace {

constexpr int kPlotSize = 420;
constexpr int kMargin = 50;
constexpr int kLegendWidth = 150;

const char* series_color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf", "#393b79", "#637939",
                                    "#8c6d31", "#843c39", "#7b4173", "#5254a3"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

void append_panel(std::string& svg, const ScaleReport& scale, std::string_view title,
                  int x0, int y0) {
    const auto px = [&](double fraction) {
        return static_cast<double>(x0 + kMargin) +
               (1.0 - fraction) * static_cast<double>(kPlotSize);
    };
    const auto py = [&](double value) {
        return static_cast<double>(y0 + kMargin) +
               (1.0 - value) * static_cast<double>(kPlotSize);
    };
    svg += "<rect x='" + std::to_string(x0 + kMargin) + "' y='" +
           std::to_string(y0 + kMargin) + "' width='" + std::to_string(kPlotSize) +
           "' height='" + std::to_string(kPlotSize) +
           "' fill='none' stroke='#333' stroke-width='1'/>\n";
    svg += "<text x='" + std::to_string(x0 + kMargin + kPlotSize / 2) + "' y='" +
           std::to_string(y0 + kMargin - 14) +
           "' text-anchor='middle' font-size='15'>" + std::string(title) + "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = static_cast<double>(t) / 4.0;
        svg += "<text x='" + format_double(px(v)) + "' y='" +
               std::to_string(y0 + kMargin + kPlotSize + 18) +
               "' text-anchor='middle' font-size='11'>" + format_double(v) + "</text>\n";
        svg += "<text x='" + std::to_string(x0 + kMargin - 6) + "' y='" +
               format_double(py(v) + 4.0) + "' text-anchor='end' font-size='11'>" +
               format_double(v) + "</text>\n";
    }
    svg += "<text x='" + std::to_string(x0 + kMargin + kPlotSize / 2) + "' y='" +
           std::to_string(y0 + kMargin + kPlotSize + 38) +
           "' text-anchor='middle' font-size='12'>retention fraction</text>\n";
    std::size_t i = 0;
    for (const MeasureRow& row : scale.rows) {
        std::string points;
        for (std::size_t p = 0; p < row.mean_curve.fractions.size(); ++p) {
            points += format_double(px(row.mean_curve.fractions[p])) + "," +
                      format_double(py(row.mean_curve.values[p])) + " ";
        }
        svg += "<polyline fill='none' stroke='" + std::string(series_color(i)) +
               "' stroke-width='1.5' points='" + points + "'/>\n";
        const int ly = y0 + kMargin + 14 + static_cast<int>(i) * 16;
        svg += "<line x1='" + std::to_string(x0 + kMargin + kPlotSize + 8) + "' y1='" +
               std::to_string(ly - 4) + "' x2='" +
               std::to_string(x0 + kMargin + kPlotSize + 28) + "' y2='" +
               std::to_string(ly - 4) + "' stroke='" + series_color(i) +
               "' stroke-width='2'/>\n";
        svg += "<text x='" + std::to_string(x0 + kMargin + kPlotSize + 32) + "' y='" +
               std::to_string(ly) + "' font-size='11'>" + row.measure + "</text>\n";
        ++i;
    }
}

} // namespace

std::string curves_svg(const MeasureReport& report) {
    const int panel_w = kMargin * 2 + kPlotSize + kLegendWidth;
    const int panel_h = kMargin * 2 + kPlotSize;
    const int width = panel_w * 2;
    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" +
                      std::to_string(width) + "' height='" + std::to_string(panel_h) +
                      "' viewBox='0 0 " + std::to_string(width) + " " +
                      std::to_string(panel_h) + "'>\n";
    svg += "<rect width='100%' height='100%' fill='white'/>\n";
    append_panel(svg, report.dsc_rc, "DSC retention curves", 0, 0);
    append_panel(svg, report.f1_rc, "Lesion F1 retention curves", panel_w, 0);
    svg += "</svg>\n";
    return svg;
}

void emit_report(const MeasureReport& report, const std::filesystem::path& out_dir,
                 const EmitOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + out_dir.string() + ": " +
                      ec.message());
    }
    if (options.json) {
        json j = report_to_json(report);
        if (options.timestamp) {
            const auto now = std::chrono::system_clock::now();
            const std::time_t t = std::chrono::system_clock::to_time_t(now);
            char buf[32];
            std::tm tm{};
            gmtime_r(&t, &tm);
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
            j["generated_at"] = buf;
        }
        write_text_file(out_dir / "report.json", j.dump(2) + "\n");
    }
    write_text_file(out_dir / "report.csv", report_csv(report));
    write_text_file(out_dir / "curves.csv", curves_csv(report));
    if (options.svg) {
        write_text_file(out_dir / "curves.svg", curves_svg(report));
    }
}

} // namespace uqeval
