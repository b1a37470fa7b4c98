#pragma once

#include <random>

#include "sts/form_field.hpp"
#include "sts/system.hpp"

namespace sts::testing {

// Random real trig polynomial supported on |n_i| <= max_mode.
inline TrigField random_real_field(const ModeLattice& lat, int max_mode,
                                   std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    TrigField f(lat);
    for (long i = 0; i < lat.num_modes(); ++i) {
        const auto n = lat.mode_of(i);
        bool inside = true;
        for (int a = 0; a < lat.dimension(); ++a)
            if (std::abs(n[a]) > max_mode) inside = false;
        if (!inside) continue;
        const Complex c(gauss(rng), gauss(rng));
        f.coeffs()(i) += 0.5 * c;
        f.coeffs()(lat.negated_index(i)) += 0.5 * std::conj(c);
    }
    return f;
}

inline FormField random_real_form(const ModeLattice& lat, int degree, int max_mode,
                                  std::mt19937_64& rng) {
    FormField psi(lat, degree);
    for (int ci = 0; ci < psi.component_count(); ++ci)
        psi.set_component(ci, random_real_field(lat, max_mode, rng));
    return psi;
}

inline TrigVectorField random_real_vector_field(const ModeLattice& lat, int max_mode,
                                                std::mt19937_64& rng) {
    TrigVectorField v(lat);
    for (int i = 0; i < lat.dimension(); ++i)
        v.comps[i] = random_real_field(lat, max_mode, rng);
    return v;
}

}  // namespace sts::testing
