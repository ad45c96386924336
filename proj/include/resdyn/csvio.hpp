#pragma once

// Deterministic CSV formatting and the run manifest. Numeric cells use a
// fixed %.10g format so identical runs produce byte-identical files.

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "resdyn/common.hpp"

namespace resdyn {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            out += header[i];
            out += (i + 1 < header.size()) ? ',' : '\n';
        }
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                out += csv_num(r[i]);
                out += (i + 1 < r.size()) ? ',' : '\n';
            }
        }
        return out;
    }
};

/// Writes the file and returns its FNV-1a content checksum.
inline std::uint64_t write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    return fnv1a(content);
}

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::map<std::string, double> stage_ms;
    std::vector<std::pair<std::string, std::uint64_t>> outputs;  ///< file, checksum

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j;
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
        j["config_hash"] = hex;
        j["seed"] = seed;
        j["tool_version"] = tool_version;
        j["stage_ms"] = stage_ms;
        j["outputs"] = nlohmann::json::array();
        for (const auto& [file, sum] : outputs) {
            std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(sum));
            j["outputs"].push_back(nlohmann::json{{"file", file}, {"fnv1a", hex}});
        }
        return j;
    }
};

}  // namespace resdyn
