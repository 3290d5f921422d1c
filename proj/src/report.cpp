/**
 * Copyright 2026 The proctorlens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "proctor/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "proctor/error.hpp"

namespace proctor {
namespace {

using nlohmann::ordered_json;

constexpr int kLabelW = 190;
constexpr int kPlotW = 520;
constexpr int kRowH = 26;
constexpr int kTop = 50;
constexpr int kBottom = 40;

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
}

std::string svg_open(int width, int height, const std::string& title) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << xml_escape(title) << "</text>\n";
    return os.str();
}

std::string bar_chart(const std::string& title, const std::string& axis, const std::vector<std::string>& labels,
                      const std::vector<double>& values, double max_value) {
    const int height = kTop + kRowH * static_cast<int>(labels.size()) + kBottom;
    const int width = kLabelW + kPlotW + 60;
    std::ostringstream os;
    os << svg_open(width, height, title);
    const double top = std::max(1.0, max_value);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = kTop + kRowH * static_cast<int>(i);
        const double w = kPlotW * values[i] / top;
        os << "<text x=\"" << kLabelW - 8 << "\" y=\"" << y + 17 << "\" text-anchor=\"end\">" << xml_escape(labels[i])
           << "</text>\n"
           << "<rect x=\"" << kLabelW << "\" y=\"" << y + 4 << "\" width=\"" << fmt(w) << "\" height=\""
           << kRowH - 8 << "\" fill=\"#4477aa\"/>\n"
           << "<text x=\"" << fmt(kLabelW + w + 6) << "\" y=\"" << y + 17 << "\">" << fmt(values[i]) << "</text>\n";
    }
    const int axis_y = kTop + kRowH * static_cast<int>(labels.size()) + 4;
    os << "<line x1=\"" << kLabelW << "\" y1=\"" << axis_y << "\" x2=\"" << kLabelW + kPlotW << "\" y2=\"" << axis_y
       << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << kLabelW << "\" y=\"" << axis_y + 16 << "\">0</text>\n"
       << "<text x=\"" << kLabelW + kPlotW << "\" y=\"" << axis_y + 16 << "\" text-anchor=\"end\">" << fmt(top)
       << "</text>\n"
       << "<text x=\"" << kLabelW + kPlotW / 2 << "\" y=\"" << axis_y + 30 << "\" text-anchor=\"middle\">"
       << xml_escape(axis) << "</text>\n</svg>\n";
    return os.str();
}

std::string absence_chart(const ReportInputs& in, const std::vector<std::string>& names,
                          const std::vector<AbsenceInterval>& intervals, int windows) {
    const int height = kTop + kRowH * static_cast<int>(names.size()) + kBottom;
    const int width = kLabelW + kPlotW + 60;
    const double span = std::max(1.0, in.duration_s);
    const auto x_of = [&](double t) { return kLabelW + kPlotW * t / span; };
    std::ostringstream os;
    os << svg_open(width, height, "Consecutive Absence Summary");
    for (std::size_t i = 0; i < names.size(); ++i) {
        const int y = kTop + kRowH * static_cast<int>(i);
        os << "<text x=\"" << kLabelW - 8 << "\" y=\"" << y + 17 << "\" text-anchor=\"end\">" << xml_escape(names[i])
           << "</text>\n"
           << "<rect x=\"" << kLabelW << "\" y=\"" << y + 4 << "\" width=\"" << kPlotW << "\" height=\"" << kRowH - 8
           << "\" fill=\"#dddddd\"/>\n";
        for (const auto& iv : intervals) {
            if (iv.student != names[i]) {
                continue;
            }
            os << "<rect x=\"" << fmt(x_of(iv.start_s)) << "\" y=\"" << y + 4 << "\" width=\""
               << fmt(x_of(iv.end_s) - x_of(iv.start_s)) << "\" height=\"" << kRowH - 8
               << "\" fill=\"#cc3311\"><title>" << fmt(iv.start_s) << "-" << fmt(iv.end_s)
               << " s</title></rect>\n";
        }
    }
    const int axis_y = kTop + kRowH * static_cast<int>(names.size()) + 4;
    os << "<line x1=\"" << kLabelW << "\" y1=\"" << axis_y << "\" x2=\"" << kLabelW + kPlotW << "\" y2=\"" << axis_y
       << "\" stroke=\"black\"/>\n";
    for (int w = 0; w <= windows; ++w) {
        const double t = std::min(span, static_cast<double>(w) * in.analysis.window_s);
        os << "<line x1=\"" << fmt(x_of(t)) << "\" y1=\"" << axis_y << "\" x2=\"" << fmt(x_of(t)) << "\" y2=\""
           << axis_y + 5 << "\" stroke=\"black\"/>\n";
        if (windows <= 20 || w % 5 == 0 || w == windows) {
            os << "<text x=\"" << fmt(x_of(t)) << "\" y=\"" << axis_y + 18 << "\" text-anchor=\"middle\" font-size=\"10\">"
               << fmt(t) << "</text>\n";
        }
    }
    os << "<text x=\"" << kLabelW + kPlotW / 2 << "\" y=\"" << axis_y + 32
       << "\" text-anchor=\"middle\">exam time (s); red = absent windows</text>\n</svg>\n";
    return os.str();
}

}  // namespace

std::string summary_json(const ReportInputs& in) {
    const auto windows = window_presence(in.events, in.roster, in.analysis, in.duration_s);
    const auto summaries = consecutive_summary(windows, in.analysis, in.duration_s);
    const auto intervals = absence_intervals(windows, in.analysis, in.duration_s);
    const int nw = window_count(in.duration_s, in.analysis.window_s);
    const double last_window_s = in.duration_s - (nw - 1) * static_cast<double>(in.analysis.window_s);

    ordered_json doc;
    doc["schema_version"] = kReportSchemaVersion;
    ordered_json run = ordered_json::parse(in.run_manifest_json, nullptr, false);
    doc["run"] = run.is_discarded() ? ordered_json::object() : run;
    doc["exam"] = {{"duration_s", in.duration_s},
                   {"window_s", in.analysis.window_s},
                   {"window_count", nw},
                   {"presence_min_count", in.analysis.presence_min_count},
                   {"accept_threshold", in.analysis.accept_threshold},
                   {"final_window_partial", last_window_s + 1e-9 < in.analysis.window_s},
                   {"final_window_s", last_window_s}};
    doc["chart_semantics"] = {
        {"recognition_frequency", "seconds with an accepted recognition of the student"},
        {"present_frequency", "windows in which the student was present (count > presence_min_count)"},
        {"consecutive_absence", "maximal runs of absent windows on the exam timeline"}};
    std::int64_t faces = 0, accepted = 0;
    for (const auto& e : in.events) {
        faces += e.face_found ? 1 : 0;
        accepted += e.accepted ? 1 : 0;
    }
    doc["events"] = {{"total", in.events.size()},
                     {"face_found", faces},
                     {"accepted", accepted},
                     {"rejected_faces", faces - accepted},
                     {"no_face", static_cast<std::int64_t>(in.events.size()) - faces}};
    ordered_json students = ordered_json::array();
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const auto& s = summaries[i];
        ordered_json counts = ordered_json::array();
        for (const auto& w : windows) {
            if (w.student == s.student) {
                counts.push_back(w.count);
            }
        }
        ordered_json absent = ordered_json::array();
        for (const auto& iv : intervals) {
            if (iv.student == s.student) {
                absent.push_back({iv.start_s, iv.end_s});
            }
        }
        students.push_back({{"student", s.student},
                            {"student_id", in.roster.records()[i].student_id},
                            {"total_recognitions", s.total_recognitions},
                            {"windows_present", s.windows_present},
                            {"windows_absent", s.windows_absent},
                            {"longest_consecutive_absence_s", s.longest_consecutive_absence_s},
                            {"window_counts", counts},
                            {"absence_intervals", absent}});
    }
    doc["students"] = students;
    return doc.dump(2) + "\n";
}

ReportBundle render_report(const ReportInputs& in, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create report directory " + out_dir.string());
    }
    ReportBundle b{out_dir / "summary.json", out_dir / "timeline.csv", out_dir / "recognition_frequency.svg",
                   out_dir / "present_frequency.svg", out_dir / "consecutive_absence.svg"};
    write_file(b.summary_json, summary_json(in));
    {
        std::ostringstream os;
        write_events_csv(os, in.events);
        write_file(b.timeline_csv, os.str());
    }

    const auto windows = window_presence(in.events, in.roster, in.analysis, in.duration_s);
    const auto summaries = consecutive_summary(windows, in.analysis, in.duration_s);
    const int nw = window_count(in.duration_s, in.analysis.window_s);
    std::vector<std::string> names;
    std::vector<double> recog, present;
    for (const auto& s : summaries) {
        names.push_back(s.student);
        recog.push_back(s.total_recognitions);
        present.push_back(s.windows_present);
    }
    write_file(b.recognition_chart,
               bar_chart("Recognition Frequency", "seconds with an accepted recognition", names, recog,
                         std::max(1.0, in.duration_s)));
    write_file(b.presence_chart,
               bar_chart("Present Frequency", "present windows of " + std::to_string(in.analysis.window_s) + " s",
                         names, present, nw));
    write_file(b.absence_chart,
               absence_chart(in, names, absence_intervals(windows, in.analysis, in.duration_s), nw));
    return b;
}

}  // namespace proctor
