#pragma once

#include <map>
#include <optional>
#include <string>

namespace anisoperc {

enum class ConstantSource { rigorous, numerical_literature, self_simulated, override_value };

std::string to_string(ConstantSource s);

struct Constant {
    double value = 0.0;
    ConstantSource source = ConstantSource::rigorous;
    std::string note;
};

// Reference constants that do not come from the model itself (thresholds of
// isotropic lattices, known exponents), each with where it came from.
class ConstantsTable {
public:
    // Built-in copy of data/constants.json.
    static ConstantsTable defaults();
    static ConstantsTable load(const std::string& path);

    std::optional<Constant> find(const std::string& name) const;
    // Throws ConfigError when absent.
    const Constant& at(const std::string& name) const;
    void set(const std::string& name, Constant c) { entries_[name] = std::move(c); }
    void override_value(const std::string& name, double value);

    const std::map<std::string, Constant>& entries() const { return entries_; }

    double bond_threshold(int dim) const { return at("bond_pc_" + std::to_string(dim)).value; }
    double site_threshold(int dim) const { return at("site_pc_" + std::to_string(dim)).value; }

private:
    std::map<std::string, Constant> entries_;
};

}  // namespace anisoperc
