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

#include <filesystem>
#include <memory>
#include <optional>

#include <recomp/history.hpp>
#include <recomp/pipeline.hpp>
#include <recomp/versioned_store.hpp>

namespace recomp {

struct WorkspaceConfig {
    TransparencyLevel transparency = Granularity::white_box;
    CacheMode cache_mode = CacheMode::full;
};

/// Per-invocation flag overrides; unset fields fall back to the workspace
/// defaults.
struct WorkspaceOverrides {
    std::optional<TransparencyLevel> transparency;
    std::optional<CacheMode> cache_mode;

    WorkspaceConfig apply_to(WorkspaceConfig config) const {
        if (transparency)
            config.transparency = *transparency;
        if (cache_mode)
            config.cache_mode = *cache_mode;
        return config;
    }
};

/// A persistent operating directory:
///   datasets/      one TSV file per registered dataset version
///   history.jsonl  the append-only record log
///   prov/          one .prov.json document per record
///   cache/         content-addressed value blobs
///   config         transparency and cache-mode defaults
/// The config written when the workspace is first created becomes its
/// defaults; per-invocation overrides do not rewrite it.
class Workspace {
public:
    /// Opens (creating if needed) the workspace at `root`. `overrides`
    /// apply on top of the persisted defaults for this instance only.
    static Workspace open(const std::filesystem::path& root,
                          const WorkspaceOverrides& overrides = {});

    const std::filesystem::path& root() const { return root_; }
    const WorkspaceConfig& config() const { return config_; }

    VersionRegistry& registry() { return *registry_; }
    HistoryStore& history() { return *history_; }
    ValueCache& cache() { return *cache_; }

    ExecutorConfig executor_config() const {
        return ExecutorConfig{config_.transparency, config_.cache_mode};
    }

    /// Advisory exclusive lock serializing invocations on one workspace.
    /// Blocks until the lock is obtained; released on destruction.
    class Lock {
    public:
        explicit Lock(const std::filesystem::path& root);
        ~Lock();
        Lock(Lock&& other) noexcept;
        Lock(const Lock&) = delete;
        Lock& operator=(const Lock&) = delete;
        Lock& operator=(Lock&&) = delete;

    private:
        int fd_ = -1;
    };

    Lock lock() const { return Lock(root_); }

private:
    Workspace() = default;

    std::filesystem::path root_;
    WorkspaceConfig config_;
    std::unique_ptr<VersionRegistry> registry_;
    std::unique_ptr<HistoryStore> history_;
    std::unique_ptr<ValueCache> cache_;
};

WorkspaceConfig parse_workspace_config(std::string_view text);
std::string workspace_config_to_string(const WorkspaceConfig& config);

} // namespace recomp
