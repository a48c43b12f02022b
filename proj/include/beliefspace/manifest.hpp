#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace beliefspace {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64 over the file bytes. Identity hash for reproducibility checks.
uint64_t file_fnv64(const std::filesystem::path& path);
std::string hex64(uint64_t v);

// Manifest builder: command, parameters, named input/output files with
// content hashes. No timestamps or environment data, so reruns with the same
// inputs produce byte-identical manifests.
class Manifest {
public:
    explicit Manifest(std::string command);

    void param(const std::string& key, const nlohmann::json& value);
    void input(const std::string& name, const std::filesystem::path& path);
    // Hash an output after it has been written.
    void output(const std::string& name, const std::filesystem::path& path);

    void write(const std::filesystem::path& path) const;
    const nlohmann::json& json() const { return j_; }

private:
    nlohmann::json j_;
};

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace beliefspace
