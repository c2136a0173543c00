#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace testutil {

struct RunResult {
    int code = -1;
    std::string output; // stdout and stderr combined
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Runs the packaged binary with the given arguments through the shell and
// captures the merged output. Tests run serially, so one scratch file is
// enough.
inline RunResult run_cli(const std::string& args) {
    const std::string scratch = std::string(PRW_WORK_DIR) + "/cli_capture.txt";
    const std::string cmd =
        std::string(PRW_CLI_BIN) + " " + args + " > " + scratch + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = (raw == -1) ? -1 : (WIFEXITED(raw) ? WEXITSTATUS(raw) : -2);
    r.output = slurp(scratch);
    return r;
}

} // namespace testutil
