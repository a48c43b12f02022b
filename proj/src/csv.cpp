#include "beliefspace/csv.hpp"

#include <array>

namespace beliefspace {

std::string csv_escape(std::string_view field, char sep) {
    bool needs_quote = false;
    for (char c : field) {
        if (c == sep || c == '"' || c == '\n' || c == '\r') {
            needs_quote = true;
            break;
        }
    }
    if (!needs_quote) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> csv_split(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == sep) {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

CsvReader::CsvReader(const std::filesystem::path& path, char sep)
    : in_(path), name_(path.string()), sep_(sep) {
    if (!in_) throw DataError("cannot open " + name_);
}

bool CsvReader::next(std::vector<std::string>& fields, size_t& line_no) {
    std::string record;
    std::string line;
    size_t start_line = 0;
    bool have = false;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have) {
            start_line = line_;
            record = line;
            have = true;
        } else {
            record.push_back('\n');
            record += line;
        }
        // A record is complete when quotes balance.
        size_t quotes = 0;
        for (char c : record)
            if (c == '"') ++quotes;
        if (quotes % 2 == 0) break;
    }
    if (!have) return false;
    fields = csv_split(record, sep_);
    line_no = start_line;
    return true;
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, char sep)
    : out_(path, std::ios::binary), name_(path.string()), sep_(sep) {
    if (!out_) throw DataError("cannot open " + name_ + " for writing");
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out_.put(sep_);
        out_ << csv_escape(fields[i], sep_);
    }
    out_.put('\n');
}

void CsvWriter::raw_line(std::string_view line) {
    out_ << line;
    out_.put('\n');
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw DataError("write failed for " + name_);
}

} // namespace beliefspace
