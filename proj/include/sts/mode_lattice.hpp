#pragma once

#include <array>
#include <cstdint>

#include "sts/errors.hpp"

namespace sts {

// Truncated Fourier lattice on the flat torus T^D: modes n in {-M..M}^D,
// enumerated lexicographically (n_1 slowest) so that matrices are
// bit-reproducible across runs and thread counts.
class ModeLattice {
public:
    ModeLattice() : ModeLattice(1, 1) {}  // placeholder for default-built holders

    ModeLattice(int dimension, int cutoff) : d_(dimension), m_(cutoff) {
        if (dimension < 1 || dimension > 3)
            throw ConfigError("ModeLattice: dimension must be 1, 2 or 3 (got " +
                              std::to_string(dimension) + ")");
        if (cutoff < 1)
            throw ConfigError("ModeLattice: cutoff M must be >= 1 (got " +
                              std::to_string(cutoff) + ")");
        side_ = 2 * m_ + 1;
        n_modes_ = 1;
        for (int i = 0; i < d_; ++i) n_modes_ *= side_;
    }

    int dimension() const { return d_; }
    int cutoff() const { return m_; }
    int side() const { return side_; }
    long num_modes() const { return n_modes_; }

    bool contains(const std::array<int, 3>& n) const {
        for (int i = 0; i < d_; ++i)
            if (n[i] < -m_ || n[i] > m_) return false;
        return true;
    }

    long index_of(const std::array<int, 3>& n) const {
        long idx = 0;
        for (int i = 0; i < d_; ++i) idx = idx * side_ + (n[i] + m_);
        return idx;
    }

    std::array<int, 3> mode_of(long idx) const {
        std::array<int, 3> n{0, 0, 0};
        for (int i = d_ - 1; i >= 0; --i) {
            n[i] = static_cast<int>(idx % side_) - m_;
            idx /= side_;
        }
        return n;
    }

    // Flat index of -n; conjugate-symmetry partner of idx.
    long negated_index(long idx) const {
        auto n = mode_of(idx);
        for (int i = 0; i < d_; ++i) n[i] = -n[i];
        return index_of(n);
    }

    bool operator==(const ModeLattice& o) const { return d_ == o.d_ && m_ == o.m_; }
    bool operator!=(const ModeLattice& o) const { return !(*this == o); }

private:
    int d_;
    int m_;
    int side_;
    long n_modes_;
};

inline ModeLattice build_lattice(int dimension, int cutoff) {
    return ModeLattice(dimension, cutoff);
}

}  // namespace sts
