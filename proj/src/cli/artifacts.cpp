#include "artifacts.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "viscoflow/errors.hpp"

#ifndef VISCOFLOW_VERSION
#define VISCOFLOW_VERSION "unknown"
#endif

namespace viscoflow::cli {

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot read artifact: " + path);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (is) {
        is.read(buf.data(), buf.size());
        if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    char two[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(two, sizeof two, "%02x", md[i]);
        hex += two;
    }
    return hex;
}

void write_file(const std::string& path, const std::string& content) {
    // write-then-rename so a reader never sees a half-written file
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InputError("cannot write " + path);
        os << content;
        if (!os) throw InputError("error writing " + path);
    }
    std::filesystem::rename(tmp, path);
}

Manifest::Manifest(std::string out_dir, Mode mode, const Config& cfg, bool strict) : out_dir_(std::move(out_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) throw InputError("cannot create output directory " + out_dir_ + ": " + ec.message());
    doc_["format"] = "viscoflow manifest v1";
    doc_["code_version"] = VISCOFLOW_VERSION;
    doc_["mode"] = mode_name(mode);
    doc_["strict"] = strict;
    json echo = json::object();
    for (const auto& [section, keys] : cfg.entries())
        for (const auto& [key, value] : keys) echo[section][key] = value;
    doc_["config"] = echo;
}

std::string Manifest::path(const std::string& name) const { return (std::filesystem::path(out_dir_) / name).string(); }

void Manifest::begin(const json& parameters) {
    doc_["parameters"] = parameters;
    flush("running", {}, false);
}

void Manifest::write(const std::string& name, const std::string& content) {
    write_file(path(name), content);
    record(name);
}

void Manifest::record(const std::string& name) {
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
}

void Manifest::finish(const std::string& status, const std::vector<std::string>& violations) {
    flush(status, violations, true);
}

void Manifest::flush(const std::string& status, const std::vector<std::string>& violations, bool checksums) const {
    json doc = doc_;
    doc["status"] = status;
    doc["violations"] = violations;
    std::vector<std::string> names = artifacts_;
    std::sort(names.begin(), names.end());
    json list = json::array();
    for (const auto& n : names) {
        json a;
        a["path"] = n;
        if (checksums) {
            a["bytes"] = std::filesystem::file_size(path(n));
            a["sha256"] = sha256_file(path(n));
        }
        list.push_back(a);
    }
    doc["artifacts"] = list;
    write_file(path("manifest.json"), doc.dump(2) + "\n");
}

}  // namespace viscoflow::cli
