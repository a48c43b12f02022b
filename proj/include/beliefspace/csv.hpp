#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "beliefspace/errors.hpp"

namespace beliefspace {

// Minimal RFC-4180-style CSV. Fields containing the separator, quotes or
// newlines are quoted with "" doubling. Enough for debate titles with commas.

std::string csv_escape(std::string_view field, char sep = ',');

// Splits one logical record. The raw line must already contain balanced
// quotes (reader handles multi-line quoted fields before calling this).
std::vector<std::string> csv_split(std::string_view line, char sep = ',');

class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path, char sep = ',');

    // Reads the next record into `fields`. Returns false at end of file.
    // `line_no` is the 1-based line the record started on.
    bool next(std::vector<std::string>& fields, size_t& line_no);

    const std::string& filename() const { return name_; }

private:
    std::ifstream in_;
    std::string name_;
    char sep_;
    size_t line_ = 0;
};

// Shortest round-trip decimal formatting via std::to_chars, so every emitted
// number is byte-stable across runs.
std::string format_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path, char sep = ',');
    void row(const std::vector<std::string>& fields);
    void raw_line(std::string_view line);
    void close();

private:
    std::ofstream out_;
    std::string name_;
    char sep_;
};

} // namespace beliefspace
