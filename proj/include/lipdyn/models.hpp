#pragma once

// Built-in test maps and perturbation families used by the CLI scenarios and
// the test suite: hyperbolic linear/nonlinear saddles, a 1D cubic, a closed
// form planar gradient map, and a cyclic competition map.

#include <map>
#include <string>

#include "lipdyn/perturbation.hpp"

namespace lipdyn {

struct BuiltModel {
    std::string name;
    MapModel model;
    std::optional<SplitLinearMap> split;  // linear part at x_star when the model fixes one
    std::optional<double> gamma_analytic;
    double region_radius = 1.0;
    Vec x_star;
    std::vector<Vec> equilibria;  // complete list when known in closed form
};

// Overridable scalar parameters (each model documents its keys; unknown keys
// are rejected).
using ModelParams = std::map<std::string, double>;

BuiltModel make_builtin_model(const std::string& name, const ModelParams& params = {});
std::vector<std::string> builtin_model_names();

struct BuiltFamily {
    std::string name;
    BuiltModel base;
    PerturbationFamily family;
};

BuiltFamily make_builtin_family(const std::string& name, const std::vector<double>& etas,
                                const ModelParams& params = {});
std::vector<std::string> builtin_family_names();

}  // namespace lipdyn
