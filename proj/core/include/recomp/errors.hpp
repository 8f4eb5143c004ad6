/*
 * Copyright (c) 2026, the recomp project authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace recomp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed textual input (snapshot TSV, provenance JSON, cohort file, ...).
/// Carries the 1-based line number when the format is line-oriented, and the
/// byte offset when it is not; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0, std::size_t offset = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line),
          offset_(offset) {}

    std::size_t line() const { return line_; }
    std::size_t offset() const { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

/// A statement references an entity or activity id that was never declared.
class UnknownIdError : public Error {
public:
    explicit UnknownIdError(const std::string& id)
        : Error("unknown id: " + id), id_(id) {}

    const std::string& id() const { return id_; }

private:
    std::string id_;
};

/// Element-level detail asserted on a black-box document.
class GranularityError : public Error {
public:
    using Error::Error;
};

/// Two dataset versions from different datasets handed to a diff.
class DatasetMismatchError : public Error {
public:
    using Error::Error;
};

/// Input values from different slots handed to diff_input.
class SlotMismatchError : public Error {
public:
    using Error::Error;
};

class DuplicateLabelError : public Error {
public:
    using Error::Error;
};

/// A dataset/version lookup that resolved to nothing.
class UnknownTagError : public Error {
public:
    using Error::Error;
};

/// A history record whose cross-references (provenance vs dependency tags vs
/// input hashes) do not line up. The message names the violated reference.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure, kept distinct from "not found".
class StorageError : public Error {
public:
    using Error::Error;
};

/// A pipeline run with an unbound input or dependency slot.
class UnboundSlotError : public Error {
public:
    explicit UnboundSlotError(const std::string& slot)
        : Error("unbound slot: " + slot), slot_(slot) {}

    const std::string& slot() const { return slot_; }

private:
    std::string slot_;
};

/// A step's apply function threw; carries the step attribution.
class StepFailureError : public Error {
public:
    StepFailureError(const std::string& step_name, int step_index, const std::string& what)
        : Error("step '" + step_name + "' (index " + std::to_string(step_index) + ") failed: " + what),
          step_name_(step_name),
          step_index_(step_index) {}

    const std::string& step_name() const { return step_name_; }
    int step_index() const { return step_index_; }

private:
    std::string step_name_;
    int step_index_;
};

/// Partial re-execution found one or more step inputs missing from the cache.
class MissingCacheError : public Error {
public:
    explicit MissingCacheError(std::vector<std::pair<std::string, std::string>> missing)
        : Error(describe(missing)), missing_(std::move(missing)) {}

    /// (slot, content hash) pairs that did not resolve.
    const std::vector<std::pair<std::string, std::string>>& missing() const { return missing_; }

private:
    static std::string describe(const std::vector<std::pair<std::string, std::string>>& missing) {
        std::string s = "missing cached values:";
        for (const auto& [slot, hash] : missing)
            s += " " + slot + "=" + hash.substr(0, 12);
        return s;
    }

    std::vector<std::pair<std::string, std::string>> missing_;
};

class InvalidStartError : public Error {
public:
    using Error::Error;
};

/// Asked to determine a starting component on black-box provenance.
class BlackBoxError : public Error {
public:
    using Error::Error;
};

class InfeasiblePlanError : public Error {
public:
    using Error::Error;
};

class InvalidRateError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace recomp
