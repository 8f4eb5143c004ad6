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

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support/temp_dir.hpp"

namespace recomp_test {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs the installed CLI binary with the given arguments, capturing both
/// streams. Arguments must not contain single quotes.
inline CliResult run_cli(const std::vector<std::string>& args) {
    static TempDir io_dir;
    const std::string out_path = (io_dir / "cli.out").string();
    const std::string err_path = (io_dir / "cli.err").string();

    std::string command = "'" RECOMP_CLI_BIN "'";
    for (const auto& arg : args)
        command += " '" + arg + "'";
    command += " >'" + out_path + "' 2>'" + err_path + "'";

    const int status = std::system(command.c_str());

    const auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

} // namespace recomp_test
