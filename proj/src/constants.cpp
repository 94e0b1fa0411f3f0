#include "anisoperc/constants.hpp"

#include <fstream>

#include <json.hpp>

#include "anisoperc/errors.hpp"

namespace anisoperc {

namespace {

ConstantSource source_from_string(const std::string& s) {
    if (s == "rigorous") return ConstantSource::rigorous;
    if (s == "numerical-literature") return ConstantSource::numerical_literature;
    if (s == "self-simulated") return ConstantSource::self_simulated;
    if (s == "override") return ConstantSource::override_value;
    throw ConfigError("constants: unknown source '" + s + "'");
}

}  // namespace

std::string to_string(ConstantSource s) {
    switch (s) {
        case ConstantSource::rigorous: return "rigorous";
        case ConstantSource::numerical_literature: return "numerical-literature";
        case ConstantSource::self_simulated: return "self-simulated";
        case ConstantSource::override_value: return "override";
    }
    return "unknown";
}

ConstantsTable ConstantsTable::defaults() {
    ConstantsTable t;
    using S = ConstantSource;
    t.set("bond_pc_1", {1.0, S::rigorous, "bond percolation on Z"});
    t.set("bond_pc_2", {0.5, S::rigorous, "square-lattice bond threshold"});
    t.set("bond_pc_3", {0.2488126, S::numerical_literature, "simple-cubic bond threshold"});
    t.set("bond_pc_4", {0.1601314, S::numerical_literature, "hypercubic Z^4 bond threshold"});
    t.set("site_pc_1", {1.0, S::rigorous, "site percolation on Z"});
    t.set("site_pc_2", {0.592746, S::numerical_literature, "square-lattice site threshold"});
    t.set("site_pc_3", {0.3116077, S::numerical_literature, "simple-cubic site threshold"});
    t.set("site_pc_4", {0.196889, S::numerical_literature, "hypercubic Z^4 site threshold"});
    t.set("gamma_1", {1.0, S::rigorous, "mean cluster size exponent on Z"});
    t.set("gamma_2", {43.0 / 18.0, S::numerical_literature, "43/18, exact two-dimensional prediction"});
    return t;
}

ConstantsTable ConstantsTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("constants: cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("constants: " + path + ": " + e.what());
    }
    if (!doc.contains("constants") || !doc["constants"].is_object())
        throw ConfigError("constants: " + path + ": missing 'constants' object");
    ConstantsTable t;
    for (const auto& [name, entry] : doc["constants"].items()) {
        if (!entry.contains("value") || !entry["value"].is_number())
            throw ConfigError("constants." + name + ".value: expected a number");
        Constant c;
        c.value = entry["value"].get<double>();
        c.source = source_from_string(entry.value("source", "numerical-literature"));
        c.note = entry.value("note", "");
        t.set(name, c);
    }
    return t;
}

std::optional<Constant> ConstantsTable::find(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

const Constant& ConstantsTable::at(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("constants: missing '" + name + "'");
    return it->second;
}

void ConstantsTable::override_value(const std::string& name, double value) {
    Constant c;
    if (auto old = find(name)) c.note = old->note;
    c.value = value;
    c.source = ConstantSource::override_value;
    entries_[name] = c;
}

}  // namespace anisoperc
