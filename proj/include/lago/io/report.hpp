#pragma once

// Report bundles: named tables plus metadata, written as one CSV per table,
// summary.txt and metadata.txt. Files are written to a temporary name and
// renamed into place, so a failed run never leaves a half-written table.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "lago/error.hpp"
#include "lago/io/config.hpp"

namespace lago::io {

inline constexpr const char* kVersion = "1.0.0";

struct Table {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    Table() = default;
    Table(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}

    void add_row(std::vector<std::string> row) {
        if (row.size() != columns.size())
            throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                                   std::to_string(columns.size()));
        rows.push_back(std::move(row));
    }

    std::string to_csv() const {
        std::string out;
        const auto emit = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
            out += "\n";
        };
        emit(columns);
        for (const auto& r : rows) emit(r);
        return out;
    }

    // Fixed-width rendering for summary.txt.
    std::string to_text() const {
        std::vector<std::size_t> width(columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) {
            width[c] = columns[c].size();
            for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
        }
        std::string out;
        const auto emit = [&](const std::vector<std::string>& cells) {
            for (std::size_t c = 0; c < cells.size(); ++c)
                out += fmt::format("{}{:>{}}", c ? "  " : "", cells[c], width[c]);
            out += "\n";
        };
        emit(columns);
        for (const auto& r : rows) emit(r);
        return out;
    }
};

struct ErrorRecord {
    std::string kind;  // usage, validation, numerical, internal
    std::string message;
    int exit_code = 1;
};

struct ReportBundle {
    std::string command;
    std::vector<Table> tables;
    std::vector<std::pair<std::string, std::string>> metadata;  // ordered key/value pairs
    std::string config_echo;
    std::vector<std::string> notes;  // lines for summary.txt
    std::vector<std::string> warnings;
    std::optional<ErrorRecord> error;

    int exit_code() const { return error ? error->exit_code : 0; }

    const Table& table(const std::string& name) const {
        for (const auto& t : tables)
            if (t.name == name) return t;
        throw std::out_of_range("no table named " + name);
    }
    bool has_table(const std::string& name) const {
        return std::any_of(tables.begin(), tables.end(), [&](const Table& t) { return t.name == name; });
    }

    std::string metadata_text() const {
        std::string out;
        for (const auto& [k, v] : metadata) out += k + " = " + v + "\n";
        out += "# config\n" + config_echo;
        if (!config_echo.empty() && config_echo.back() != '\n') out += "\n";
        return out;
    }

    std::string summary_text() const {
        std::string out = "lago " + command + "\n";
        if (error) out += "\nerror (" + error->kind + "): " + error->message + "\n";
        for (const auto& n : notes) out += n + "\n";
        for (const auto& t : tables) out += "\n[" + t.name + "]\n" + t.to_text();
        if (!warnings.empty()) {
            out += "\nwarnings\n";
            for (const auto& w : warnings) out += "  " + w + "\n";
        }
        return out;
    }

    std::string error_text() const {
        if (!error) return {};
        return "kind = " + error->kind + "\nexit_code = " + std::to_string(error->exit_code) +
               "\nmessage = " + error->message + "\n";
    }
};

// Cell formatting shared by every table.
inline std::string cell(double v) { return std::isnan(v) ? "NA" : format_double(v); }
inline std::string cell(double v, int decimals) {
    return std::isnan(v) ? "NA" : fmt::format("{:.{}f}", v, decimals);
}

namespace detail {

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw ValidationError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ValidationError("cannot move " + tmp.string() + " into place");
    }
}

}  // namespace detail

// Returns the paths written. Error bundles write error.txt, metadata.txt and
// summary.txt only; successful bundles clear any stale error.txt.
inline std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw ValidationError("cannot create output directory " + dir.string());

    std::vector<std::filesystem::path> written;
    const auto put = [&](const std::string& file, const std::string& content) {
        detail::write_atomically(dir / file, content);
        written.push_back(dir / file);
    };
    if (bundle.error) {
        put("error.txt", bundle.error_text());
    } else {
        for (const auto& t : bundle.tables) put(t.name + ".csv", t.to_csv());
        std::filesystem::remove(dir / "error.txt", ec);
    }
    put("metadata.txt", bundle.metadata_text());
    put("summary.txt", bundle.summary_text());
    return written;
}

}  // namespace lago::io
