#pragma once

#include <string>
#include <vector>

#include "sts/trig_field.hpp"

namespace sts {

// Noise coupling: A >= 1 vector fields G_a and intensity Theta > 0.
// Nondegeneracy of the induced metric g^{ij} = sum_a G_a^i G_a^j is a
// property checked separately (check_nondegenerate), not a constructor
// guarantee.
struct NoiseModel {
    std::vector<TrigVectorField> fields;
    double theta = 0.0;

    NoiseModel(std::vector<TrigVectorField> gs, double th)
        : fields(std::move(gs)), theta(th) {
        if (fields.empty()) throw ConfigError("NoiseModel: need at least one field");
        if (!(theta > 0.0)) throw ConfigError("NoiseModel: Theta must be > 0");
    }

    int count() const { return static_cast<int>(fields.size()); }
};

// One model: lattice + flow + noise. The single source of truth consumed by
// operator assembly, simulation and reporting.
struct SystemSpec {
    ModeLattice lattice;
    TrigVectorField flow;
    NoiseModel noise;
    std::string name;

    SystemSpec(ModeLattice lat, TrigVectorField f, NoiseModel n, std::string nm)
        : lattice(lat), flow(std::move(f)), noise(std::move(n)), name(std::move(nm)) {
        if (flow.lattice() != lattice)
            throw ConfigError("SystemSpec: flow lattice mismatch");
        for (const auto& g : noise.fields)
            if (g.lattice() != lattice)
                throw ConfigError("SystemSpec: noise lattice mismatch");
    }

    int dimension() const { return lattice.dimension(); }
};

// Constant-frame noise G_a = d/dx^a, a = 1..D.
inline std::vector<TrigVectorField> constant_frame(const ModeLattice& lat) {
    std::vector<TrigVectorField> gs;
    for (int a = 0; a < lat.dimension(); ++a) {
        TrigVectorField g(lat);
        g.comps[a] = TrigField::constant(lat, 1.0);
        gs.push_back(std::move(g));
    }
    return gs;
}

}  // namespace sts
