#include "beliefspace/manifest.hpp"

#include <array>
#include <fstream>

#include "beliefspace/errors.hpp"
#include "beliefspace/rng.hpp"

namespace beliefspace {

uint64_t file_fnv64(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string() + " for hashing");
    uint64_t h = kFnvOffset;
    std::array<char, 65536> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= kFnvPrime;
        }
    }
    return h;
}

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

Manifest::Manifest(std::string command) {
    j_["command"] = std::move(command);
    j_["version"] = kToolVersion;
    j_["params"] = nlohmann::json::object();
    j_["inputs"] = nlohmann::json::object();
    j_["outputs"] = nlohmann::json::object();
}

void Manifest::param(const std::string& key, const nlohmann::json& value) {
    j_["params"][key] = value;
}

void Manifest::input(const std::string& name, const std::filesystem::path& path) {
    j_["inputs"][name] = {{"path", path.generic_string()}, {"fnv64", hex64(file_fnv64(path))}};
}

void Manifest::output(const std::string& name, const std::filesystem::path& path) {
    j_["outputs"][name] = {{"path", path.generic_string()}, {"fnv64", hex64(file_fnv64(path))}};
}

void Manifest::write(const std::filesystem::path& path) const { write_json_file(j_, path); }

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    out.close();
    if (out.fail()) throw DataError("write failed for " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return j;
}

} // namespace beliefspace
