#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sts/errors.hpp"

namespace sts {

// Wedge-basis combinatorics: the strictly increasing multi-indices
// (i_1 < ... < i_k) of coordinate labels 0..D-1, enumerated
// lexicographically, with the Levi-Civita signs for inserting or removing
// one label. Removing the label in (1-based) slot m carries sign (-1)^(m-1);
// inserting the same label back lands in the same slot, so
// insert-then-remove composes to +1.
class MultiIndexSet {
public:
    MultiIndexSet(int dimension, int degree) : d_(dimension), k_(degree) {
        if (degree < 0 || degree > dimension)
            throw ConfigError("MultiIndexSet: degree out of range");
        std::array<int, 3> tuple{0, 0, 0};
        enumerate(tuple, 0, 0);
    }

    int dimension() const { return d_; }
    int degree() const { return k_; }
    int count() const { return static_cast<int>(tuples_.size()); }

    const std::array<int, 3>& labels(int ci) const { return tuples_[ci]; }

    bool contains_label(int ci, int label) const {
        for (int m = 0; m < k_; ++m)
            if (tuples_[ci][m] == label) return true;
        return false;
    }

    // Position of ci's tuple within the degree-(k+1) enumeration after
    // inserting `label`, together with the Levi-Civita sign.
    // Returns nothing when the label is already present.
    std::optional<std::pair<int, int>> insert_label(const MultiIndexSet& up, int ci,
                                                    int label) const {
        std::array<int, 3> out{0, 0, 0};
        int sign = 1;
        int pos = 0;
        const auto& t = tuples_[ci];
        int w = 0;
        for (int m = 0; m < k_; ++m) {
            if (t[m] == label) return std::nullopt;
            if (t[m] < label) {
                out[w++] = t[m];
                ++pos;
            }
        }
        out[w++] = label;
        for (int m = 0; m < k_; ++m)
            if (t[m] > label) out[w++] = t[m];
        if (pos % 2 == 1) sign = -1;  // (-1)^(slot-1), slot = pos+1
        return std::make_pair(sign, up.rank_of(out));
    }

    // Label in slot m (0-based), its removal sign, and the position of the
    // reduced tuple in the degree-(k-1) enumeration.
    struct Removal {
        int label;
        int sign;
        int down_index;
    };
    Removal remove_slot(const MultiIndexSet& down, int ci, int slot) const {
        const auto& t = tuples_[ci];
        std::array<int, 3> out{0, 0, 0};
        int w = 0;
        for (int m = 0; m < k_; ++m)
            if (m != slot) out[w++] = t[m];
        return Removal{t[slot], (slot % 2 == 0) ? 1 : -1, down.rank_of(out)};
    }

    // Complementary tuple (labels absent from ci) and the sign of the
    // permutation (tuple, complement) relative to (0..D-1).
    std::pair<std::array<int, 3>, int> complement(int ci) const {
        const auto& t = tuples_[ci];
        std::array<int, 3> comp{0, 0, 0};
        int w = 0;
        for (int lab = 0; lab < d_; ++lab) {
            bool in = false;
            for (int m = 0; m < k_; ++m)
                if (t[m] == lab) in = true;
            if (!in) comp[w++] = lab;
        }
        // Sign = parity of inversions of the concatenation (t, comp).
        std::array<int, 3> perm{0, 0, 0};
        for (int m = 0; m < k_; ++m) perm[m] = t[m];
        for (int m = 0; m < d_ - k_; ++m) perm[k_ + m] = comp[m];
        int inv = 0;
        for (int a = 0; a < d_; ++a)
            for (int b = a + 1; b < d_; ++b)
                if (perm[a] > perm[b]) ++inv;
        return {comp, (inv % 2 == 0) ? 1 : -1};
    }

    int rank_of(const std::array<int, 3>& tuple) const {
        for (int ci = 0; ci < count(); ++ci) {
            bool same = true;
            for (int m = 0; m < k_; ++m)
                if (tuples_[ci][m] != tuple[m]) same = false;
            if (same) return ci;
        }
        throw ConfigError("MultiIndexSet: tuple not in enumeration");
    }

private:
    void enumerate(std::array<int, 3>& tuple, int depth, int next) {
        if (depth == k_) {
            tuples_.push_back(tuple);
            return;
        }
        for (int lab = next; lab < d_; ++lab) {
            tuple[depth] = lab;
            enumerate(tuple, depth + 1, lab + 1);
        }
    }

    int d_;
    int k_;
    std::vector<std::array<int, 3>> tuples_;
};

inline long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

}  // namespace sts
