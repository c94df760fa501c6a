#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string_view>

#include "georl/latex_math.hpp"

namespace georl::latex {

inline bool is_greek(std::string_view name) {
    static constexpr std::array<std::string_view, 32> names = {
        "alpha", "beta",  "gamma",   "delta", "epsilon", "varepsilon", "zeta",  "eta",   "theta",
        "vartheta", "iota", "kappa", "lambda", "mu",    "nu",         "xi",    "rho",   "sigma",
        "tau",   "upsilon", "phi",   "varphi", "chi",   "psi",        "omega", "Gamma", "Delta",
        "Theta", "Lambda", "Sigma", "Phi",     "Omega"};
    return std::find(names.begin(), names.end(), name) != names.end();
}

inline std::optional<Function> function_from_name(std::string_view name) {
    if (name == "sin") return Function::Sin;
    if (name == "cos") return Function::Cos;
    if (name == "tan") return Function::Tan;
    if (name == "log") return Function::Log;
    if (name == "ln") return Function::Ln;
    return std::nullopt;
}

}  // namespace georl::latex
