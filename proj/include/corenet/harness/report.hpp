#ifndef CORENET_HARNESS_REPORT_HPP
#define CORENET_HARNESS_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "corenet/harness/record.hpp"

namespace corenet::harness {

enum class ReportFormat { csv, json_manifest, svg_lines };

inline ReportFormat report_format_from_name(const std::string& name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json" || name == "json-manifest") return ReportFormat::json_manifest;
    if (name == "svg" || name == "svg-lines") return ReportFormat::svg_lines;
    throw InvalidSpec("unknown report format '" + name + "'");
}

namespace detail {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

// Minimal static line chart; output bytes depend only on the input data.
inline std::string svg_line_chart(const std::vector<Series>& series, const std::string& title,
                                  const std::string& x_label, const std::string& y_label) {
    const double width = 640, height = 400;
    const double left = 60, right = 600, top = 40, bottom = 360;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;

    const auto sx = [&](double x) {
        return left + (x - xmin) / (xmax - xmin) * (right - left);
    };
    const auto sy = [&](double y) {
        return bottom - (y - ymin) / (ymax - ymin) * (bottom - top);
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      format_double(width) + "\" height=\"" + format_double(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" + title + "</text>\n";
    svg += "<line x1=\"60\" y1=\"360\" x2=\"600\" y2=\"360\" stroke=\"black\"/>\n";
    svg += "<line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"360\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double fx = xmin + (xmax - xmin) * tick / 4.0;
        const double fy = ymin + (ymax - ymin) * tick / 4.0;
        svg += "<text x=\"" + format_double(sx(fx)) +
               "\" y=\"378\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">" + format_double(fx) + "</text>\n";
        svg += "<text x=\"52\" y=\"" + format_double(sy(fy) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_double(fy) + "</text>\n";
    }
    svg += "<text x=\"330\" y=\"396\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">" + x_label + "</text>\n";
    svg += "<text x=\"16\" y=\"200\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\" transform=\"rotate(-90 16 200)\">" + y_label + "</text>\n";

    size_t color = 0;
    for (const auto& s : series) {
        if (s.points.empty()) continue;
        std::string poly = "<polyline fill=\"none\" stroke=\"";
        poly += kPalette[color % (sizeof kPalette / sizeof kPalette[0])];
        poly += "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : s.points)
            poly += format_double(sx(x)) + "," + format_double(sy(y)) + " ";
        poly += "\"/>\n";
        svg += poly;
        svg += "<text x=\"604\" y=\"" + format_double(sy(s.points.back().second) + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
               kPalette[color % (sizeof kPalette / sizeof kPalette[0])] + "\">" + s.label +
               "</text>\n";
        ++color;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace detail

// Writes per-record CSVs, manifests, or line charts of accuracy and NAPL
// over epochs. Byte-deterministic given identical records.
inline std::vector<std::string> emit_report(const std::vector<ExperimentRecord>& records,
                                            ReportFormat format, const std::string& out_dir) {
    if (records.empty()) throw InvalidSpec("report needs at least one record");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    const auto emit = [&](const std::string& name, const std::string& content) {
        const std::string path = out_dir + "/" + name;
        write_text_file(path, content);
        written.push_back(path);
    };

    switch (format) {
        case ReportFormat::csv:
            for (size_t i = 0; i < records.size(); ++i)
                emit("metrics_" + std::to_string(i) + ".csv", metrics_csv(records[i]));
            break;
        case ReportFormat::json_manifest:
            for (size_t i = 0; i < records.size(); ++i)
                emit("manifest_" + std::to_string(i) + ".json",
                     manifest_to_json(records[i].manifest).dump(2) + "\n");
            break;
        case ReportFormat::svg_lines: {
            std::vector<detail::Series> acc, napl;
            for (size_t i = 0; i < records.size(); ++i) {
                detail::Series sa, sn;
                sa.label = "run" + std::to_string(i);
                sn.label = sa.label;
                for (const auto& row : records[i].rows) {
                    sa.points.emplace_back(row.epoch, row.test_acc);
                    sn.points.emplace_back(row.epoch, row.napl);
                }
                acc.push_back(std::move(sa));
                napl.push_back(std::move(sn));
            }
            emit("accuracy.svg",
                 detail::svg_line_chart(acc, "test accuracy", "epoch", "accuracy"));
            emit("napl.svg",
                 detail::svg_line_chart(napl, "normalized average path length", "epoch", "napl"));
            break;
        }
    }
    return written;
}

}  // namespace corenet::harness

#endif  // CORENET_HARNESS_REPORT_HPP
