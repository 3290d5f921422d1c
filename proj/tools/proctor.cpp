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

// proctor: post-exam gallery video analysis.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "proctor/error.hpp"
#include "proctor/pipeline.hpp"

namespace {

const std::map<std::string, std::string> kSubcommandHelp = {
    {"build-dataset", "harvest labelled face crops from the training video"},
    {"train", "train the face classifier on the dataset"},
    {"analyze", "detect and recognize faces in the exam video, one prediction per second and cell"},
    {"report", "write summary.json, timeline.csv and the three charts"},
    {"all", "build-dataset, train, analyze and report in sequence"},
    {"synth", "render a synthetic gallery recording with ground truth"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proctor: post-exam gallery video analysis.\n"
                 "Settings come from defaults, then --config FILE, then --section.key flags."};
    app.set_version_flag("--version", std::string(proctor::kProctorVersion));
    std::string config_file;
    bool print_config = false;
    app.add_option("-c,--config", config_file, "INI config file");
    app.add_flag("--print-config", print_config, "print the effective config as INI and exit");

    std::map<std::string, std::string> flag_values;
    for (const auto& k : proctor::config_keys()) {
        app.add_option("--" + k.dotted(), flag_values[k.dotted()], k.help)->group(k.section);
    }
    for (const auto& sub : proctor::kSubcommands) {
        app.add_subcommand(std::string(sub), kSubcommandHelp.at(std::string(sub)));
    }
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(proctor::ErrorClass::config);
    }

    proctor::ConfigValues overrides;
    for (const auto& k : proctor::config_keys()) {
        if (app.count("--" + k.dotted()) > 0) {
            overrides[k.dotted()] = flag_values[k.dotted()];
        }
    }
    proctor::PipelineConfig cfg;
    try {
        cfg = proctor::resolve_config(config_file, overrides);
    } catch (const proctor::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    }
    if (print_config) {
        std::cout << proctor::to_ini(cfg);
        return 0;
    }
    const auto subs = app.get_subcommands();
    if (subs.empty()) {
        std::cerr << app.help();
        return static_cast<int>(proctor::ErrorClass::config);
    }
    return proctor::run_subcommand(subs.front()->get_name(), cfg, std::cerr);
}
