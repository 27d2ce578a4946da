#include "data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "util.hpp"

namespace lfmm {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& tok : out) {
        auto b = tok.find_first_not_of(" \t");
        auto e = tok.find_last_not_of(" \t");
        tok = (b == std::string::npos) ? "" : tok.substr(b, e - b + 1);
    }
    return out;
}

int parse_int_field(const std::string& tok, const char* what, int lineno) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(lineno) + ": cannot parse " +
                         what + " '" + tok + "' as an integer");
    return v;
}

double parse_double_field(const std::string& tok, const char* what, int lineno) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(lineno) + ": cannot parse " +
                         what + " '" + tok + "' as a number");
    if (!std::isfinite(v))
        throw ParseError("line " + std::to_string(lineno) + ": non-finite " +
                         std::string(what) + " '" + tok + "'");
    return v;
}

}  // namespace

void Dataset::finalize(bool require_coverage) {
    if (rows.empty()) throw ParseError("dataset has no observations");
    if (num_predictors <= 0) throw ParseError("dataset declares no predictors");

    num_times = 0;
    x_max.assign(num_predictors, 0);
    for (const auto& r : rows) {
        num_times = std::max(num_times, r.time + 1);
        for (int j = 0; j < num_predictors; ++j)
            x_max[j] = std::max(x_max[j], r.levels[j]);
    }

    // Duplicate (subject, trial, time) keys.
    std::set<std::tuple<int, int, int>> seen;
    for (const auto& r : rows) {
        if (!seen.insert({r.subject, r.trial, r.time}).second)
            throw ParseError("duplicate observation for subject '" +
                             subject_ids[r.subject] + "', trial " +
                             std::to_string(r.trial) + ", time " +
                             std::to_string(r.time + 1));
    }

    // Every level of every predictor observed at every time index.
    for (int j = 0; require_coverage && j < num_predictors; ++j) {
        std::vector<std::vector<char>> present(
            x_max[j], std::vector<char>(num_times, 0));
        for (const auto& r : rows) present[r.levels[j] - 1][r.time] = 1;
        for (int lev = 0; lev < x_max[j]; ++lev)
            for (int t = 0; t < num_times; ++t)
                if (!present[lev][t])
                    throw ParseError(
                        "predictor x" + std::to_string(j + 1) + " level " +
                        std::to_string(lev + 1) + " has no observation at time " +
                        std::to_string(t + 1));
    }

    // Observed combinations, sorted lexicographically.
    std::set<std::vector<int>> combo_set;
    for (const auto& r : rows) combo_set.insert(r.levels);
    combos.assign(combo_set.begin(), combo_set.end());
    combo_index.clear();
    for (int c = 0; c < static_cast<int>(combos.size()); ++c)
        combo_index[combos[c]] = c;
    for (auto& r : rows) r.combo = combo_index.at(r.levels);

    rows_at.assign(num_times,
                   std::vector<std::vector<int>>(combos.size()));
    rows_by_subject.assign(subject_ids.size(), {});
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
        rows_at[rows[i].time][rows[i].combo].push_back(i);
        rows_by_subject[rows[i].subject].push_back(i);
    }
}

Dataset parse_dataset_csv(const std::string& text, const std::string& origin,
                          bool require_coverage) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(origin + ": empty file");
    auto header = split_csv(line);
    if (header.size() < 5 || header[0] != "subject" || header[1] != "trial" ||
        header[2] != "time" || header[3] != "y")
        throw ParseError(origin + ": header must be subject,trial,time,y,x1..xp");
    int p = static_cast<int>(header.size()) - 4;
    for (int j = 0; j < p; ++j)
        if (header[4 + j] != "x" + std::to_string(j + 1))
            throw ParseError(origin + ": covariate column " + std::to_string(j + 5) +
                             " must be named x" + std::to_string(j + 1));

    Dataset data;
    data.num_predictors = p;
    std::map<std::string, int> subject_lookup;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto tok = split_csv(line);
        if (tok.size() != header.size())
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(tok.size()));
        Row r;
        if (tok[0].empty())
            throw ParseError("line " + std::to_string(lineno) + ": empty subject id");
        auto [it, fresh] = subject_lookup.try_emplace(
            tok[0], static_cast<int>(data.subject_ids.size()));
        if (fresh) data.subject_ids.push_back(tok[0]);
        r.subject = it->second;
        r.trial = parse_int_field(tok[1], "trial", lineno);
        if (r.trial < 1)
            throw ParseError("line " + std::to_string(lineno) +
                             ": trial must be a positive integer");
        int t = parse_int_field(tok[2], "time", lineno);
        if (t < 1)
            throw ParseError("line " + std::to_string(lineno) +
                             ": time index must be a positive integer");
        r.time = t - 1;
        r.y = parse_double_field(tok[3], "response", lineno);
        r.levels.resize(p);
        for (int j = 0; j < p; ++j) {
            int lev = parse_int_field(tok[4 + j], header[4 + j].c_str(), lineno);
            if (lev < 1)
                throw ParseError("line " + std::to_string(lineno) + ": covariate " +
                                 header[4 + j] + " level must be >= 1, got " +
                                 std::to_string(lev));
            r.levels[j] = lev;
        }
        data.rows.push_back(std::move(r));
    }
    data.finalize(require_coverage);
    return data;
}

Dataset load_dataset(const std::string& path, bool require_coverage) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset_csv(buf.str(), path, require_coverage);
}

std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream out;
    out << "subject,trial,time,y";
    for (int j = 0; j < data.num_predictors; ++j) out << ",x" << (j + 1);
    out << "\n";
    for (const auto& r : data.rows) {
        out << data.subject_ids[r.subject] << ',' << r.trial << ',' << (r.time + 1)
            << ',' << format_double(r.y);
        for (int lev : r.levels) out << ',' << lev;
        out << "\n";
    }
    return out.str();
}

void write_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << dataset_to_csv(data);
    if (!out) throw IoError("failed writing dataset to '" + path + "'");
}

std::uint64_t dataset_digest(const Dataset& data) {
    return fnv1a64(dataset_to_csv(data));
}

}  // namespace lfmm
