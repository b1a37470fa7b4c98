#pragma once

#include <map>
#include <string>
#include <vector>

#include "sts/system.hpp"

namespace sts {

// One parsed term of the flow-expression language:
//   expr  := ['+'|'-'] term (('+'|'-') term)*
//   term  := [number '*'] func | number
//   func  := ('sin'|'cos') '(' phase ')'
//   phase := int '*' var (('+'|'-') int '*' var)*
//   var   := 'x1' | 'x2' | 'x3'
// Whitespace is insignificant.
struct FlowTerm {
    enum class Kind { Sin, Cos, Const };
    double coeff = 0.0;
    Kind kind = Kind::Const;
    std::array<int, 3> wave{0, 0, 0};
};

struct FlowExpression {
    std::string source;
    int dimension = 1;
    std::vector<FlowTerm> terms;

    std::string to_string() const;
    // Coefficients via Euler's formula; throws when a wavevector falls
    // outside the lattice cutoff.
    TrigField to_field(const ModeLattice& lattice) const;
};

FlowExpression parse_flow_expression(const std::string& text, int dimension);
TrigField parse_to_field(const std::string& text, const ModeLattice& lattice);

// Named parameters for builtin systems; unknown keys are rejected.
struct BuiltinParams {
    std::map<std::string, double> values;

    BuiltinParams() = default;
    BuiltinParams(std::initializer_list<std::pair<const std::string, double>> init)
        : values(init) {}
};

std::vector<std::string> builtin_names();

// Benchmark registry:
//   diffusion  F = 0, constant-frame noise (param D = 1,2,3)
//   grad1d     F = -sin x, additive noise
//   mult1d     F = -sin x, G = 1 + 0.5 cos x
//   grad2d     F = -grad(cos x1 + cos x2 + eps cos(x1+x2)), param eps = 0
//   shear2d    F = (sin x2, 0)
//   abc3d      the A,B,C cellular flow, params A = B = C = 1
// All accept "theta" and "M" overrides.
SystemSpec builtin(const std::string& name, const BuiltinParams& params = {});

// JSON document {name, D, M, theta, F: [expr per component],
// G: [[expr per component] per noise field]}.
SystemSpec load_system_config(const std::string& path);

// Resolve "--system" CLI values: a registered builtin name or a path to a
// JSON config file.
SystemSpec resolve_system(const std::string& name_or_path,
                          const BuiltinParams& params = {});

}  // namespace sts
