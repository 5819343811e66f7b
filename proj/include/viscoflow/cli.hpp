#pragma once

#include <map>
#include <string>
#include <vector>

namespace viscoflow::cli {

enum class Mode { Analyze, Linear, Simulate, Iterate, Constraints, Scaling };

// ConfigurationError on an unknown name.
Mode parse_mode(const std::string& name);
const char* mode_name(Mode m);

// Sectioned key-value configuration.  Every key has a type and a default;
// unknown sections or keys are rejected.
class Config {
public:
    static Config defaults();
    // INI file; relative paths inside it resolve against its directory.
    static Config load(const std::string& path);

    // "section.key" = value, type-checked (sweeps and --set).
    void set(const std::string& dotted, const std::string& value);

    int integer(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key) const;
    bool flag(const std::string& section, const std::string& key) const;
    std::string text(const std::string& section, const std::string& key) const;
    std::vector<double> numbers(const std::string& section, const std::string& key) const;
    std::vector<int> integers(const std::string& section, const std::string& key) const;
    std::vector<std::string> words(const std::string& section, const std::string& key) const;

    // Path value resolved against the config directory.
    std::string path(const std::string& section, const std::string& key) const;

    // Effective values (defaults filled in), in canonical text form.
    const std::map<std::string, std::map<std::string, std::string>>& entries() const { return values_; }
    const std::string& source() const { return source_; }

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
    std::string source_;
    std::string base_dir_ = ".";
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitViolation = 2;

// Runs one mode and writes its artifacts into out_dir.  Returns the exit code.
int run(Mode mode, const Config& cfg, const std::string& out_dir, bool strict);

// Full command line: viscoflow <mode> --config <path> [--strict]
// [--sweep section.key=v1,v2,...] [--out dir].
int main(int argc, char** argv);

}  // namespace viscoflow::cli
