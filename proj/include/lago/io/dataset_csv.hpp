#pragma once

// Participant-level data files.
//
//   stage,center_id,arm,a_1,...,a_p,z_1,...,z_q,y[,count]
//
// `arm` is control or intervention. A `count` column turns a row into that many
// identical participants. Control rows are read with a = 0 whatever the file says.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lago/error.hpp"
#include "lago/estimation.hpp"
#include "lago/io/config.hpp"

namespace lago::io {

namespace detail {

inline bool numbered_column(const std::string& name, char prefix, Eigen::Index expected) {
    return name == std::string(1, prefix) + "_" + std::to_string(expected);
}

struct CsvLayout {
    Eigen::Index p = 0;
    Eigen::Index q = 0;
    bool has_count = false;
    std::size_t columns = 0;
};

inline CsvLayout read_header(const std::vector<std::string>& cols) {
    const auto missing = [](const std::string& what) { return ParseError("header: missing column " + what, 1); };
    if (cols.size() < 1 || cols[0] != "stage") throw missing("stage");
    if (cols.size() < 2 || cols[1] != "center_id") throw missing("center_id");
    if (cols.size() < 3 || cols[2] != "arm") throw missing("arm");
    CsvLayout layout;
    std::size_t i = 3;
    while (i < cols.size() && numbered_column(cols[i], 'a', layout.p + 1)) ++layout.p, ++i;
    while (i < cols.size() && numbered_column(cols[i], 'z', layout.q + 1)) ++layout.q, ++i;
    if (i >= cols.size() || cols[i] != "y") {
        if (i < cols.size() && (cols[i].rfind("a_", 0) == 0 || cols[i].rfind("z_", 0) == 0))
            throw ParseError("header: column " + cols[i] + " is out of sequence", 1);
        throw missing("y");
    }
    ++i;
    if (i < cols.size() && cols[i] == "count") layout.has_count = true, ++i;
    if (i != cols.size()) throw ParseError("header: unexpected column " + cols[i], 1);
    layout.columns = cols.size();
    return layout;
}

inline double cell_number(const std::string& text, const std::string& column, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
        throw ParseError(column + ": invalid number '" + text + "'", line);
    return v;
}

inline long long cell_integer(const std::string& text, const std::string& column, std::size_t line) {
    const std::string digits = !text.empty() && text[0] == '-' ? text.substr(1) : text;
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError(column + ": expected an integer, got '" + text + "'", line);
    return std::stoll(text);
}

}  // namespace detail

inline StageDataset parse_dataset_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string row;
    std::size_t line = 0;
    if (!std::getline(in, row)) throw ParseError("data file is empty", 1);
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    const auto layout = detail::read_header(split(row, ','));
    StageDataset data(layout.p, layout.q);

    while (std::getline(in, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (trim(row).empty()) continue;
        const auto cells = split(row, ',');
        if (cells.size() != layout.columns)
            throw ParseError("expected " + std::to_string(layout.columns) + " fields, found " +
                                 std::to_string(cells.size()),
                             line);
        ParticipantRecord rec;
        const auto stage = detail::cell_integer(cells[0], "stage", line);
        if (stage < 1) throw ParseError("stage must be a positive integer", line);
        rec.stage = static_cast<int>(stage);
        rec.center_id = cells[1];
        if (rec.center_id.empty()) throw ParseError("center_id is empty", line);
        if (cells[2] == "control") rec.arm = Arm::control;
        else if (cells[2] == "intervention") rec.arm = Arm::intervention;
        else throw ParseError("arm must be control or intervention, got '" + cells[2] + "'", line);

        std::size_t c = 3;
        rec.actual = InterventionPackage::zeros(layout.p);
        for (Eigen::Index r = 0; r < layout.p; ++r, ++c)
            rec.actual.components[r] = detail::cell_number(cells[c], "a_" + std::to_string(r + 1), line);
        if (rec.arm == Arm::control) rec.actual = InterventionPackage::zeros(layout.p);
        rec.covariates = CenterCovariates::zeros(layout.q);
        for (Eigen::Index s = 0; s < layout.q; ++s, ++c)
            rec.covariates.values[s] = detail::cell_number(cells[c], "z_" + std::to_string(s + 1), line);

        const auto y = detail::cell_integer(cells[c++], "y", line);
        if (y != 0 && y != 1) throw ParseError("y must be 0 or 1, got " + cells[c - 1], line);
        rec.outcome = static_cast<int>(y);
        if (layout.has_count) {
            const auto count = detail::cell_integer(cells[c], "count", line);
            if (count < 1) throw ParseError("count must be at least 1, got " + cells[c], line);
            rec.weight = static_cast<std::uint64_t>(count);
        }
        try {
            data.add(std::move(rec));
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line);
        }
    }
    return data;
}

inline StageDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open data file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset_csv(buf.str());
}

// Always writes the count column so aggregated records survive the round trip.
inline std::string format_dataset_csv(const StageDataset& data) {
    std::string out = "stage,center_id,arm";
    for (Eigen::Index r = 0; r < data.p(); ++r) out += ",a_" + std::to_string(r + 1);
    for (Eigen::Index s = 0; s < data.q(); ++s) out += ",z_" + std::to_string(s + 1);
    out += ",y,count\n";
    for (const auto& rec : data.records()) {
        out += std::to_string(rec.stage) + "," + rec.center_id + "," + to_string(rec.arm);
        for (Eigen::Index r = 0; r < data.p(); ++r) out += "," + format_double(rec.actual[r]);
        for (Eigen::Index s = 0; s < data.q(); ++s) out += "," + format_double(rec.covariates.values[s]);
        out += "," + std::to_string(rec.outcome) + "," + std::to_string(rec.weight) + "\n";
    }
    return out;
}

}  // namespace lago::io
