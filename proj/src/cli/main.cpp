#include <CLI11.hpp>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <thread>

#include "artifacts.hpp"
#include "viscoflow/errors.hpp"

extern char** environ;

namespace viscoflow::cli {

namespace {

struct Args {
    std::string mode;
    std::string config;
    std::string out = "viscoflow-out";
    std::string sweep;
    std::vector<std::string> sets;
    bool strict = false;
};

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigurationError(std::string(flag) + " expects section.key=value");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

Config build_config(const Args& a) {
    Config c = Config::load(a.config);
    for (const auto& s : a.sets) {
        auto [k, v] = split_assignment(s, "--set");
        c.set(k, v);
    }
    return c;
}

std::string sweep_dir_name(const std::string& key, const std::string& value) {
    std::string v = value;
    std::replace(v.begin(), v.end(), '/', '_');
    return key + "=" + v;
}

pid_t spawn_worker(const std::vector<std::string>& argv) {
    std::vector<char*> cargv;
    for (const auto& s : argv) cargv.push_back(const_cast<char*>(s.c_str()));
    cargv.push_back(nullptr);
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, "/proc/self/exe", nullptr, nullptr, cargv.data(), environ);
    if (rc != 0) throw Error("cannot start sweep worker: " + std::string(std::strerror(rc)));
    return pid;
}

// One worker process per value, each with its own output directory.
int run_sweep(const Args& a, const Config& base) {
    auto [key, list] = split_assignment(a.sweep, "--sweep");
    std::vector<std::string> values;
    std::size_t start = 0;
    while (true) {
        const auto comma = list.find(',', start);
        values.push_back(list.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (const auto& v : values) {
        Config probe = base;
        probe.set(key, v);  // reject bad values before any worker starts
    }
    std::filesystem::create_directories(a.out);

    struct Job {
        std::string value, dir;
        pid_t pid = -1;
        int code = -1;
    };
    std::vector<Job> jobs;
    for (const auto& v : values) jobs.push_back({v, sweep_dir_name(key, v)});

    const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
    std::size_t next = 0, running = 0, done = 0;
    while (done < jobs.size()) {
        while (next < jobs.size() && running < width) {
            std::vector<std::string> argv = {"viscoflow", a.mode, "--config", a.config, "--out",
                                             (std::filesystem::path(a.out) / jobs[next].dir).string()};
            if (a.strict) argv.push_back("--strict");
            for (const auto& s : a.sets) argv.insert(argv.end(), {"--set", s});
            argv.insert(argv.end(), {"--set", key + "=" + jobs[next].value});
            jobs[next].pid = spawn_worker(argv);
            ++next;
            ++running;
        }
        int status = 0;
        const pid_t pid = waitpid(-1, &status, 0);
        if (pid < 0) break;
        for (auto& j : jobs)
            if (j.pid == pid) j.code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitViolation;
        --running;
        ++done;
    }

    int worst = kExitOk;
    json runs = json::array();
    for (const auto& j : jobs) {
        runs.push_back({{"value", j.value}, {"dir", j.dir}, {"exit_code", j.code}});
        worst = std::max(worst, j.code);
    }
    json doc = {{"format", "viscoflow sweep v1"}, {"mode", a.mode}, {"key", key}, {"runs", runs}};
    write_file((std::filesystem::path(a.out) / "sweep.json").string(), doc.dump(2) + "\n");
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    Args a;
    CLI::App app{"viscoflow: viscoelastic flow diagnostics"};
    app.add_option("mode", a.mode, "analyze | linear | simulate | iterate | constraints | scaling")->required();
    app.add_option("--config", a.config, "INI configuration file")->required();
    app.add_flag("--strict", a.strict, "exit 2 when an invariant check fails");
    app.add_option("--sweep", a.sweep, "section.key=v1,v2,...: one worker process per value");
    app.add_option("--out", a.out, "output directory")->capture_default_str();
    app.add_option("--set", a.sets, "section.key=value override")->group("");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }
    try {
        const Mode mode = parse_mode(a.mode);
        const Config cfg = build_config(a);
        if (!a.sweep.empty()) return run_sweep(a, cfg);
        const int code = run(mode, cfg, a.out, a.strict);
        if (code == kExitOk) std::cout << "viscoflow " << a.mode << ": artifacts in " << a.out << "\n";
        return code;
    } catch (const Error& e) {
        std::cerr << "viscoflow: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "viscoflow: " << e.what() << "\n";
        return kExitInput;
    }
}

}  // namespace viscoflow::cli
