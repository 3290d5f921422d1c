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

#pragma once

#include <stdexcept>
#include <string>

namespace proctor {

/// Error classes; the numeric value is the CLI exit status.
enum class ErrorClass : int {
    config = 2,
    input_data = 3,
    too_short_video = 4,
    backend = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }
    int exit_code() const noexcept { return static_cast<int>(cls_); }

private:
    ErrorClass cls_;
};

#define PROCTOR_DEFINE_ERROR(Name, Cls)                                      \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
    }

PROCTOR_DEFINE_ERROR(ConfigError, config);
PROCTOR_DEFINE_ERROR(InputError, input_data);
PROCTOR_DEFINE_ERROR(UnreadableVideo, input_data);
PROCTOR_DEFINE_ERROR(EmptyVideo, input_data);
PROCTOR_DEFINE_ERROR(IoError, input_data);
PROCTOR_DEFINE_ERROR(DatasetTooSmall, input_data);
PROCTOR_DEFINE_ERROR(CapacityExceeded, input_data);
PROCTOR_DEFINE_ERROR(TooShortVideo, too_short_video);
PROCTOR_DEFINE_ERROR(ModelLoadError, backend);
PROCTOR_DEFINE_ERROR(InferenceError, backend);
PROCTOR_DEFINE_ERROR(EngineUnavailable, backend);
PROCTOR_DEFINE_ERROR(BackendError, backend);

#undef PROCTOR_DEFINE_ERROR

}  // namespace proctor
