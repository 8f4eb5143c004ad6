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
#include <recomp/workspace.hpp>

#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

namespace recomp {

namespace fs = std::filesystem;

WorkspaceConfig parse_workspace_config(std::string_view text) {
    WorkspaceConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "transparency") {
            if (value == "white" || value == "white_box")
                config.transparency = Granularity::white_box;
            else if (value == "black" || value == "black_box")
                config.transparency = Granularity::black_box;
            else
                throw ConfigError("invalid transparency: '" + value + "'");
        } else if (key == "cache_mode") {
            config.cache_mode = cache_mode_from_string(value);
        } else {
            throw ConfigError("unknown config key: '" + key + "'");
        }
    }
    return config;
}

std::string workspace_config_to_string(const WorkspaceConfig& config) {
    std::string out;
    out += "transparency=";
    out += config.transparency == Granularity::white_box ? "white" : "black";
    out += "\ncache_mode=";
    out += to_string(config.cache_mode);
    out += "\n";
    return out;
}

Workspace Workspace::open(const fs::path& root, const WorkspaceOverrides& overrides) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec)
        throw StorageError("cannot create workspace " + root.string() + ": " + ec.message());

    Workspace ws;
    ws.root_ = root;

    const fs::path config_path = root / "config";
    if (fs::exists(config_path)) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in)
            throw StorageError("cannot read " + config_path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        ws.config_ = overrides.apply_to(parse_workspace_config(buf.str()));
    } else {
        // the flags in force at creation become the workspace defaults
        ws.config_ = overrides.apply_to(WorkspaceConfig{});
        std::ofstream out(config_path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw StorageError("cannot write " + config_path.string());
        out << workspace_config_to_string(ws.config_);
    }

    ws.registry_ = std::make_unique<VersionRegistry>(root / "datasets");
    ws.history_ = std::make_unique<HistoryStore>(root / "history.jsonl", root / "prov");
    ws.cache_ = std::make_unique<ValueCache>(root / "cache");
    return ws;
}

Workspace::Lock::Lock(const fs::path& root) {
    const fs::path path = root / ".lock";
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0)
        throw StorageError("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw StorageError("cannot lock workspace " + root.string());
    }
}

Workspace::Lock::~Lock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

Workspace::Lock::Lock(Lock&& other) noexcept : fd_(other.fd_) {
    other.fd_ = -1;
}

} // namespace recomp
