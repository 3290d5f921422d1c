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

#include "proctor/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "json.hpp"
#include "proctor/error.hpp"

namespace proctor::synth {
namespace {

using nlohmann::json;

constexpr int kLabelFont = cv::FONT_HERSHEY_SIMPLEX;
constexpr double kFaceHeightFrac = 0.76;  // portrait side / cell height
constexpr int kFaceTop = 6;

struct Portrait {
    const char* file;
    cv::Rect head;     // square head region in the photo
    cv::Rect2d face;   // face box within the head region, as fractions
};

// Head regions and face boxes measured on the two bundled photos.
const std::array<Portrait, 2> kPortraits{{
    {"faces/astronaut.png", {140, 32, 170, 170}, {44.0 / 170, 30.0 / 170, 83.0 / 170, 111.0 / 170}},
    {"faces/grace_hopper.jpg", {107, 63, 330, 330}, {75.0 / 330, 52.0 / 330, 180.0 / 330, 227.0 / 330}},
}};

// Per-identity colour gains (B, G, R).
const std::array<cv::Vec3d, 10> kGains{{
    {1.0, 1.0, 1.0},
    {1.25, 0.9, 0.8},
    {0.8, 0.95, 1.25},
    {0.85, 1.2, 0.9},
    {1.2, 1.15, 0.7},
    {0.7, 0.9, 1.1},
    {1.1, 0.75, 1.2},
    {0.9, 1.1, 1.3},
    {1.3, 1.0, 1.0},
    {0.75, 0.75, 0.75},
}};

const std::array<cv::Scalar, 10> kCollars{{
    {200, 60, 40}, {40, 160, 40}, {40, 40, 190}, {170, 170, 40}, {170, 40, 170},
    {40, 170, 170}, {120, 120, 220}, {220, 120, 120}, {90, 200, 90}, {200, 200, 200},
}};

struct Identity {
    cv::Mat patch;   // side x side BGR
    cv::Rect face;   // within patch
};

Identity make_identity(int id, int side) {
    const auto& p = kPortraits[static_cast<std::size_t>(id % 2)];
    const auto path = asset_dir() / p.file;
    const cv::Mat photo = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (photo.empty()) {
        throw IoError("cannot read face asset " + path.string());
    }
    cv::Mat head;
    cv::resize(photo(p.head), head, {side, side}, 0, 0, cv::INTER_AREA);
    const auto& g = kGains[static_cast<std::size_t>((id / 2 + id % 2 * 5) % 10)];
    cv::Mat f;
    head.convertTo(f, CV_32FC3);
    cv::multiply(f, cv::Scalar(g[0], g[1], g[2]), f);
    f.convertTo(head, CV_8UC3);
    const int cycle = id / 10;  // beyond ten identities, shift hue too
    if (cycle > 0) {
        cv::Mat hsv;
        cv::cvtColor(head, hsv, cv::COLOR_BGR2HSV);
        std::vector<cv::Mat> ch;
        cv::split(hsv, ch);
        ch[0] += cv::Scalar((cycle * 37) % 180);
        cv::merge(ch, hsv);
        cv::cvtColor(hsv, head, cv::COLOR_HSV2BGR);
    }
    cv::Rect face(static_cast<int>(std::lround(p.face.x * side)), static_cast<int>(std::lround(p.face.y * side)),
                  static_cast<int>(std::lround(p.face.width * side)),
                  static_cast<int>(std::lround(p.face.height * side)));
    if ((id / 5) % 2 == 1) {
        cv::flip(head, head, 1);
        face.x = side - face.x - face.width;
    }
    const int collar = std::max(2, side / 9);
    cv::rectangle(head, cv::Rect(0, side - collar, side, collar), kCollars[static_cast<std::size_t>(id % 10)],
                  cv::FILLED);
    return {head, face & cv::Rect(0, 0, side, side - collar)};
}

const Identity& identity(int id, int side) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, Identity> cache;
    std::lock_guard lock(mu);
    auto it = cache.find({id, side});
    if (it == cache.end()) {
        it = cache.emplace(std::pair{id, side}, make_identity(id, side)).first;
    }
    return it->second;
}

int identity_of(const Participant& p, std::size_t idx) {
    return p.identity >= 0 ? p.identity : static_cast<int>(idx);
}

bool on_screen(const Participant& p, double t) {
    return t + 1e-9 >= p.join_s && (!p.leave_s || t + 1e-9 < *p.leave_s);
}

bool face_visible(const Participant& p, double t) {
    return std::none_of(p.absences.begin(), p.absences.end(),
                        [t](const Span& s) { return t + 1e-9 >= s.start_s && t + 1e-9 < s.end_s; });
}

struct TimedEvent {
    double t;
    ReflowKind kind;
    std::size_t idx;
};

std::vector<TimedEvent> timed_events(const SessionScript& s) {
    std::vector<TimedEvent> ev;
    for (std::size_t i = 0; i < s.participants.size(); ++i) {
        ev.push_back({s.participants[i].join_s, ReflowKind::join, i});
        if (s.participants[i].leave_s) {
            ev.push_back({*s.participants[i].leave_s, ReflowKind::leave, i});
        }
    }
    std::stable_sort(ev.begin(), ev.end(), [](const TimedEvent& a, const TimedEvent& b) {
        if (a.t != b.t) {
            return a.t < b.t;
        }
        return a.kind == ReflowKind::leave && b.kind == ReflowKind::join;
    });
    return ev;
}

double frame_time(const SessionScript& s, std::int64_t f) { return static_cast<double>(f) / s.fps; }

std::size_t index_of(const SessionScript& s, const std::string& name) {
    for (std::size_t i = 0; i < s.participants.size(); ++i) {
        if (s.participants[i].name == name) {
            return i;
        }
    }
    throw std::invalid_argument("unknown participant " + name);
}

/// Portrait position inside a cell, including a slow deterministic sway.
cv::Point face_origin(const SessionScript& s, std::size_t idx, std::int64_t frame, cv::Size cell, int side) {
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(frame) / (3.0 * s.fps)) +
                         static_cast<double>(idx) * 1.3 + static_cast<double>(s.seed % 97);
    const int dx = static_cast<int>(std::lround(2.0 * std::sin(phase)));
    const int dy = static_cast<int>(std::lround(1.5 * std::cos(phase)));
    const int x = std::clamp((cell.width - side) / 2 + dx, 0, std::max(0, cell.width - side));
    const int y = std::clamp(kFaceTop * cell.height / 144 + dy, 0, std::max(0, cell.height - side));
    return {x, y};
}

int face_side(cv::Size cell) {
    return std::max(8, std::min(static_cast<int>(std::lround(kFaceHeightFrac * cell.height)), cell.width));
}

json span_json(const Span& s) { return json::array({s.start_s, s.end_s}); }

}  // namespace

std::filesystem::path asset_dir() {
    if (const char* env = std::getenv("PROCTOR_ASSET_DIR"); env && *env) {
        return env;
    }
    return PROCTOR_ASSET_DIR;
}

std::int64_t SessionScript::frame_count() const {
    return static_cast<std::int64_t>(std::llround(std::floor(duration_s * fps + 1e-9)));
}

void SessionScript::validate() const {
    if (!(duration_s > 0.0) || !(fps > 0.0)) {
        throw ConfigError("script duration_s and fps must be > 0");
    }
    if (rows < 1 || cols < 1 || width < cols || height < rows) {
        throw ConfigError("script grid/frame size is invalid");
    }
    if (!(label_scale > 0.0)) {
        throw ConfigError("script label_scale must be > 0");
    }
    std::set<std::string> names;
    for (const auto& p : participants) {
        if (p.name.empty()) {
            throw ConfigError("participant without a name");
        }
        if (!names.insert(p.name).second) {
            throw ConfigError("duplicate participant " + p.name);
        }
        const double end = p.leave_s.value_or(duration_s);
        if (p.join_s < 0.0 || p.join_s >= duration_s || end <= p.join_s) {
            throw ConfigError("participant " + p.name + " has an empty or out-of-range presence");
        }
        for (const auto& s : p.absences) {
            if (!(s.start_s < s.end_s) || s.start_s < p.join_s || s.end_s > end + 1e-9) {
                throw ConfigError("absence span of " + p.name + " lies outside its presence");
            }
        }
    }
    std::vector<std::string> order;
    for (const auto& e : timed_events(*this)) {
        order = reflow_layout(std::move(order), {e.kind, participants[e.idx].name}, rows * cols);
    }
}

SessionScript SessionScript::from_json(const std::string& text) {
    SessionScript s;
    try {
        const json j = json::parse(text);
        s.duration_s = j.value("duration_s", s.duration_s);
        s.fps = j.value("fps", s.fps);
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        s.rows = j.value("rows", s.rows);
        s.cols = j.value("cols", s.cols);
        s.seed = j.value("seed", s.seed);
        s.label_scale = j.value("label_scale", s.label_scale);
        for (const auto& pj : j.at("participants")) {
            Participant p;
            p.name = pj.at("name").get<std::string>();
            p.label = pj.value("label", std::string());
            p.join_s = pj.value("join_s", 0.0);
            if (pj.contains("leave_s") && !pj["leave_s"].is_null()) {
                p.leave_s = pj["leave_s"].get<double>();
            }
            for (const auto& a : pj.value("absences", json::array())) {
                p.absences.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
            }
            p.identity = pj.value("identity", -1);
            s.participants.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed session script: ") + e.what());
    }
    s.validate();
    return s;
}

SessionScript SessionScript::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw InputError("cannot read session script " + path.string());
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

std::string SessionScript::to_json() const {
    json j;
    j["duration_s"] = duration_s;
    j["fps"] = fps;
    j["width"] = width;
    j["height"] = height;
    j["rows"] = rows;
    j["cols"] = cols;
    j["seed"] = seed;
    j["label_scale"] = label_scale;
    json ps = json::array();
    for (const auto& p : participants) {
        json pj{{"name", p.name}, {"join_s", p.join_s}, {"identity", p.identity}};
        if (!p.label.empty()) {
            pj["label"] = p.label;
        }
        pj["leave_s"] = p.leave_s ? json(*p.leave_s) : json(nullptr);
        json abs = json::array();
        for (const auto& a : p.absences) {
            abs.push_back(span_json(a));
        }
        pj["absences"] = abs;
        ps.push_back(pj);
    }
    j["participants"] = ps;
    return j.dump(2);
}

std::vector<std::string> reflow_layout(std::vector<std::string> order, const ReflowEvent& event, int capacity) {
    const auto it = std::find(order.begin(), order.end(), event.who);
    if (event.kind == ReflowKind::join) {
        if (it != order.end()) {
            throw std::invalid_argument(event.who + " is already in the session");
        }
        if (static_cast<int>(order.size()) >= capacity) {
            throw CapacityExceeded("gallery is full (" + std::to_string(capacity) + " cells); cannot add " + event.who);
        }
        order.push_back(event.who);
    } else {
        if (it == order.end()) {
            throw std::invalid_argument(event.who + " is not in the session");
        }
        order.erase(it);
    }
    return order;
}

std::vector<std::string> layout_at(const SessionScript& script, double t) {
    std::vector<std::string> order;
    for (const auto& e : timed_events(script)) {
        if (e.t > t + 1e-9) {
            break;
        }
        order = reflow_layout(std::move(order), {e.kind, script.participants[e.idx].name},
                              script.rows * script.cols);
    }
    return order;
}

std::vector<CellTruth> frame_truth(const SessionScript& script, std::int64_t frame_idx) {
    const double t = frame_time(script, frame_idx);
    const GridLayout layout(script.rows, script.cols, script.width, script.height);
    std::vector<CellTruth> out;
    const auto order = layout_at(script, t);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t idx = index_of(script, order[k]);
        const auto& p = script.participants[idx];
        CellTruth c;
        c.cell = cell_from_index(static_cast<int>(k), layout);
        c.name = p.name;
        c.label = p.shown_label();
        c.face_present = face_visible(p, t);
        const auto r = cell_rect(layout, c.cell);
        const cv::Size tile(std::max(1, r.w - 2), std::max(1, r.h - 2));
        const int side = face_side(tile);
        const auto origin = face_origin(script, idx, frame_idx, tile, side);
        const auto& id = identity(identity_of(p, idx), side);
        c.face_box = {r.x + 1 + origin.x + id.face.x, r.y + 1 + origin.y + id.face.y, id.face.width,
                      id.face.height};
        out.push_back(std::move(c));
    }
    return out;
}

cv::Mat render_cell(const SessionScript& script, const Participant& who, std::size_t participant_idx,
                    bool with_face, std::int64_t frame_idx, cv::Size cell_size) {
    const int base = 40 + static_cast<int>((participant_idx * 13) % 35);
    cv::Mat cell(cell_size, CV_8UC3, cv::Scalar(base + 8, base, base - 6));
    if (with_face) {
        const int side = face_side(cell_size);
        const auto& id = identity(identity_of(who, participant_idx), side);
        const auto origin = face_origin(script, participant_idx, frame_idx, cell_size, side);
        const cv::Rect dst(origin.x, origin.y, side, side);
        id.patch(cv::Rect(0, 0, dst.width, dst.height)).copyTo(cell(dst));
    }
    int baseline = 0;
    const std::string& text = who.shown_label();
    const auto size = cv::getTextSize(text, kLabelFont, script.label_scale, 1, &baseline);
    const int box_h = std::min(cell_size.height, size.height + 8);
    const int box_w = std::min(cell_size.width, size.width + 10);
    cv::rectangle(cell, cv::Rect(0, cell_size.height - box_h, box_w, box_h), cv::Scalar(30, 30, 30), cv::FILLED);
    cv::putText(cell, text, {5, cell_size.height - 4}, kLabelFont, script.label_scale, cv::Scalar(255, 255, 255), 1,
                cv::LINE_AA);
    return cell;
}

cv::Mat render_frame(const SessionScript& script, std::int64_t frame_idx) {
    const double t = frame_time(script, frame_idx);
    const GridLayout layout(script.rows, script.cols, script.width, script.height);
    cv::Mat frame(script.height, script.width, CV_8UC3, cv::Scalar(18, 18, 18));
    const auto order = layout_at(script, t);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t idx = index_of(script, order[k]);
        const auto& p = script.participants[idx];
        const auto r = cell_rect(layout, cell_from_index(static_cast<int>(k), layout));
        // A 2 px dark gutter separates tiles, as in conferencing galleries.
        const cv::Rect tile(r.x + 1, r.y + 1, std::max(1, r.w - 2), std::max(1, r.h - 2));
        render_cell(script, p, idx, face_visible(p, t), frame_idx, tile.size()).copyTo(frame(tile));
    }
    return frame;
}

std::vector<std::pair<std::string, int>> face_seconds(const SessionScript& script) {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& p : script.participants) {
        out.emplace_back(p.name, 0);
    }
    const auto seconds = static_cast<std::int64_t>(std::ceil(script.duration_s - 1e-9));
    for (std::int64_t s = 0; s < seconds; ++s) {
        const double t = static_cast<double>(static_cast<std::int64_t>(std::ceil(s * script.fps - 1e-9))) / script.fps;
        if (t >= script.duration_s) {
            break;
        }
        for (std::size_t i = 0; i < script.participants.size(); ++i) {
            const auto& p = script.participants[i];
            if (on_screen(p, t) && face_visible(p, t)) {
                ++out[i].second;
            }
        }
    }
    return out;
}

Roster script_roster(const SessionScript& script) {
    std::vector<StudentRecord> recs;
    for (std::size_t i = 0; i < script.participants.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "S%03zu", i + 1);
        recs.push_back({id, script.participants[i].name});
    }
    return Roster(std::move(recs));
}

SynthOutputs generate_video(const SessionScript& script, const std::filesystem::path& out_dir) {
    script.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    }
    SynthOutputs out{out_dir / "video.mp4", out_dir / "ground_truth.json", out_dir / "roster.csv",
                     script.frame_count()};
    // Tile rectangles shrink by the gutter; the frame-level truth uses them.
    const GridLayout layout(script.rows, script.cols, script.width, script.height);
    cv::VideoWriter writer(out.video.string(), cv::VideoWriter::fourcc('m', 'p', '4', 'v'), script.fps,
                           {script.width, script.height});
    if (!writer.isOpened()) {
        throw IoError("cannot open video writer for " + out.video.string());
    }
    json frames = json::array();
    for (std::int64_t f = 0; f < out.frames; ++f) {
        writer.write(render_frame(script, f));
        json cells = json::array();
        const double t = frame_time(script, f);
        const auto order = layout_at(script, t);
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t idx = index_of(script, order[k]);
            const auto& p = script.participants[idx];
            const CellRef cell = cell_from_index(static_cast<int>(k), layout);
            const auto r = cell_rect(layout, cell);
            const cv::Size tile(std::max(1, r.w - 2), std::max(1, r.h - 2));
            const int side = face_side(tile);
            const auto origin = face_origin(script, idx, f, tile, side);
            const auto& id = identity(identity_of(p, idx), side);
            const bool face = face_visible(p, t);
            json c{cell.row, cell.col, p.name, face ? 1 : 0};
            if (face) {
                c.push_back(r.x + 1 + origin.x + id.face.x);
                c.push_back(r.y + 1 + origin.y + id.face.y);
                c.push_back(id.face.width);
                c.push_back(id.face.height);
            }
            cells.push_back(std::move(c));
        }
        frames.push_back({f, std::move(cells)});
    }
    writer.release();

    json gt;
    gt["schema_version"] = 1;
    gt["script"] = json::parse(script.to_json());
    gt["cell_fields"] = {"row", "col", "name", "face_present", "face_x", "face_y", "face_w", "face_h"};
    gt["frames"] = std::move(frames);
    std::ofstream g(out.ground_truth);
    g << gt.dump() << '\n';
    if (!g) {
        throw IoError("cannot write " + out.ground_truth.string());
    }
    script_roster(script).save_csv(out.roster);
    return out;
}

}  // namespace proctor::synth
