#include "samples_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "util.hpp"

namespace lfmm {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string u64_hex(std::uint64_t v) {
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[v & 0xf];
        v >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

std::uint64_t parse_u64_hex(const std::string& s, const std::string& what) {
    if (s.size() != 16) throw ParseError("bad " + what + " field");
    std::uint64_t v = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else throw ParseError("bad " + what + " field");
        v = (v << 4) | static_cast<std::uint64_t>(d);
    }
    return v;
}

ordered_json draw_to_json(const Draw& d) {
    ordered_json o;
    o["it"] = d.iteration;
    {
        ordered_json z = ordered_json::array();
        for (const auto& per_j : d.first) {
            ordered_json zj = ordered_json::array();
            for (const auto& labels : per_j) {
                ordered_json zk = ordered_json::array();
                for (int lab : labels) zk.push_back(lab + 1);
                zj.push_back(std::move(zk));
            }
            z.push_back(std::move(zj));
        }
        o["z"] = std::move(z);
    }
    {
        ordered_json z2 = ordered_json::array();
        for (const auto& per_k : d.second) {
            ordered_json zk = ordered_json::array();
            for (const auto& [key, lab] : per_k) {
                ordered_json cell = ordered_json::array();
                for (int v : key) cell.push_back(v + 1);
                cell.push_back(lab + 1);
                zk.push_back(std::move(cell));
            }
            z2.push_back(std::move(zk));
        }
        o["z2"] = std::move(z2);
    }
    o["b"] = d.beta;
    o["ell"] = d.ell;
    o["u"] = d.u;
    o["p0"] = d.pi0;
    o["pr"] = d.trans;
    o["ps"] = d.pi_star;
    o["a"] = d.alpha;
    o["phi"] = d.phi;
    o["as"] = d.alpha_star;
    o["sb"] = d.sigma_beta_sq;
    o["nb"] = d.nu_beta;
    o["sus"] = d.sigma_us;
    o["sua"] = d.sigma_ua;
    o["se"] = d.sigma_eps_sq;
    return o;
}

Draw draw_from_json(const ordered_json& o) {
    Draw d;
    d.iteration = o.at("it").get<int>();
    for (const auto& zj : o.at("z")) {
        std::vector<std::vector<int>> per_j;
        for (const auto& zk : zj) {
            std::vector<int> labels;
            for (const auto& v : zk) labels.push_back(v.get<int>() - 1);
            per_j.push_back(std::move(labels));
        }
        d.first.push_back(std::move(per_j));
    }
    for (const auto& zk : o.at("z2")) {
        std::vector<std::pair<std::vector<int>, int>> per_k;
        for (const auto& cell : zk) {
            if (cell.size() < 2) throw ParseError("bad second-layer cell record");
            std::vector<int> key;
            for (size_t i = 0; i + 1 < cell.size(); ++i)
                key.push_back(cell[i].get<int>() - 1);
            per_k.emplace_back(std::move(key), cell.back().get<int>() - 1);
        }
        d.second.push_back(std::move(per_k));
    }
    d.beta = o.at("b").get<std::vector<std::vector<double>>>();
    d.ell = o.at("ell").get<std::vector<std::vector<int>>>();
    d.u = o.at("u").get<std::vector<std::vector<double>>>();
    d.pi0 = o.at("p0").get<std::vector<std::vector<double>>>();
    d.trans = o.at("pr").get<std::vector<std::vector<std::vector<double>>>>();
    d.pi_star = o.at("ps").get<std::vector<std::vector<double>>>();
    d.alpha = o.at("a").get<std::vector<double>>();
    d.phi = o.at("phi").get<std::vector<double>>();
    d.alpha_star = o.at("as").get<double>();
    d.sigma_beta_sq = o.at("sb").get<double>();
    d.nu_beta = o.at("nb").get<double>();
    d.sigma_us = o.at("sus").get<double>();
    d.sigma_ua = o.at("sua").get<double>();
    d.sigma_eps_sq = o.at("se").get<double>();
    return d;
}

}  // namespace

std::string samples_to_text(const SampleStore& store) {
    const StoreMeta& m = store.meta;
    ordered_json h;
    h["format"] = "lfmm-samples";
    h["version"] = 1;
    h["seed"] = u64_hex(m.seed);
    h["iterations"] = m.iterations;
    h["burnin"] = m.burn_in;
    h["thin"] = m.thin;
    h["num_locations"] = m.num_locations;
    h["num_predictors"] = m.num_predictors;
    h["num_subjects"] = m.num_subjects;
    h["x_max"] = m.x_max;
    h["z_max"] = m.z_max;
    h["combos"] = m.combos;
    h["subjects"] = m.subjects;
    h["random_effects"] = m.random_effects;
    h["data_digest"] = u64_hex(m.data_digest);
    std::string out = h.dump();
    out.push_back('\n');
    for (const auto& d : store.draws) {
        out += draw_to_json(d).dump();
        out.push_back('\n');
    }
    return out;
}

void write_samples(const SampleStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << samples_to_text(store);
    if (!out) throw IoError("failed writing samples to '" + path + "'");
}

SampleStore parse_samples_text(const std::string& text,
                               const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(origin + ": empty sample stream");
    SampleStore store;
    int lineno = 1;
    try {
        ordered_json h = ordered_json::parse(line);
        if (h.at("format").get<std::string>() != "lfmm-samples" ||
            h.at("version").get<int>() != 1)
            throw ParseError(origin + ": not a version-1 lfmm sample stream");
        StoreMeta& m = store.meta;
        m.seed = parse_u64_hex(h.at("seed").get<std::string>(), "seed");
        m.iterations = h.at("iterations").get<int>();
        m.burn_in = h.at("burnin").get<int>();
        m.thin = h.at("thin").get<int>();
        m.num_locations = h.at("num_locations").get<int>();
        m.num_predictors = h.at("num_predictors").get<int>();
        m.num_subjects = h.at("num_subjects").get<int>();
        m.x_max = h.at("x_max").get<std::vector<int>>();
        m.z_max = h.at("z_max").get<std::vector<int>>();
        m.combos = h.at("combos").get<std::vector<std::vector<int>>>();
        m.subjects = h.at("subjects").get<std::vector<std::string>>();
        m.random_effects = h.at("random_effects").get<bool>();
        m.data_digest =
            parse_u64_hex(h.at("data_digest").get<std::string>(), "data_digest");
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            store.draws.push_back(draw_from_json(ordered_json::parse(line)));
        }
    } catch (const ordered_json::exception& e) {
        throw ParseError(origin + " line " + std::to_string(lineno) + ": " +
                         e.what());
    }
    return store;
}

SampleStore read_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open samples file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_samples_text(buf.str(), path);
}

LocalPartition draw_partition(const Draw& draw, const StoreMeta& meta, int k) {
    PartitionState part;
    part.first = draw.first;
    part.second.resize(meta.num_locations);
    for (int kk = 0; kk < static_cast<int>(draw.second.size()); ++kk)
        for (const auto& [key, lab] : draw.second[kk])
            part.second[kk][key] = lab;
    CovariateSpace space;
    space.num_predictors = meta.num_predictors;
    space.x_max = meta.x_max;
    space.z_max = meta.z_max;
    return derive_partition(part, space, k, meta.combos);
}

double expanded_coefficient(const Draw& draw, const LocalPartition& part,
                            int k, int combo) {
    return draw.beta[k][part.cell_of_combo[combo]];
}

}  // namespace lfmm
