#pragma once

// Runs the grounder CLI as a child process from a scratch directory.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace cli {

struct Result {
    int exit_code = -1;
    std::string out;
};

class Sandbox {
public:
    Sandbox() {
        std::random_device rd;
        dir_ = std::filesystem::temp_directory_path() / ("grounder-cli-" + std::to_string(rd()));
        std::filesystem::create_directories(dir_);
    }
    ~Sandbox() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    Sandbox(const Sandbox&) = delete;
    Sandbox& operator=(const Sandbox&) = delete;

    const std::filesystem::path& dir() const { return dir_; }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    /// `args` is appended to the binary path verbatim (shell syntax); stderr is discarded.
    Result run(const std::string& args, const std::string& env = "") const {
        const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" GROUNDER_CLI_PATH "' " +
                                args + " 2>/dev/null";
        Result r;
        FILE* pipe = popen(cmd.c_str(), "r");
        if (pipe == nullptr) return r;
        std::array<char, 4096> buf{};
        std::size_t got = 0;
        while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
        const int status = pclose(pipe);
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return r;
    }

    std::string read(const std::string& name) const {
        std::ifstream in(dir_ / name, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name, std::ios::binary) << text;
    }

private:
    std::filesystem::path dir_;
};

}  // namespace cli
