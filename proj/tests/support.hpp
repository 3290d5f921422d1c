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

// Shared fixtures for the test binaries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "proctor/synth.hpp"

namespace testsupport {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("proctor-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Small 2x2 gallery at 512x288 (256x144 cells), easy on the detector.
inline proctor::synth::SessionScript small_script(double duration_s, int participants) {
    static const char* names[] = {"CHAN TAI MAN", "LI MING", "WONG SIU FAI", "HO KA YAN"};
    proctor::synth::SessionScript s;
    s.duration_s = duration_s;
    s.fps = 30.0;
    s.width = 512;
    s.height = 288;
    s.rows = 2;
    s.cols = 2;
    s.seed = 3;
    for (int i = 0; i < participants; ++i) {
        proctor::synth::Participant p;
        p.name = names[i];
        s.participants.push_back(p);
    }
    return s;
}

/// Name strip that covers the synthetic label box.
inline constexpr double kSynthStrip[4] = {0.0, 0.82, 0.75, 0.18};

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline int uniform(std::mt19937_64& g, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(g);
}

}  // namespace testsupport
