// indexing.hpp -- signed state labels and their contiguous storage layout
//
// States carry signed labels j in {-n,...,-1,+1,...,+n} (no zero): j > 0 is
// matter, j < 0 is antimatter. Vectors and matrices are stored contiguously
// in the order -n,...,-1,+1,...,+n, so storage slot s in [0, 2n) maps to a
// signed label via the helpers below. Slots [0, n) are antimatter, [n, 2n)
// are matter, and label negation is storage-order reversal.

#pragma once

#include <stdexcept>
#include <string>

namespace pme {

// Matter/antimatter indicator C_j = +1 (matter), -1 (antimatter).
inline double indicator(int j) { return j > 0 ? 1.0 : -1.0; }

inline bool valid_signed_index(int j, int n) {
    return j != 0 && j >= -n && j <= n;
}

inline int to_storage(int j, int n) {
    if (!valid_signed_index(j, n)) {
        throw std::out_of_range("state index " + std::to_string(j) +
                                " outside {-" + std::to_string(n) + ",...,-1,+1,...,+" +
                                std::to_string(n) + "}");
    }
    return j < 0 ? j + n : j + n - 1;
}

inline int to_signed(int s, int n) {
    if (s < 0 || s >= 2 * n) {
        throw std::out_of_range("storage slot " + std::to_string(s) + " outside [0, " +
                                std::to_string(2 * n) + ")");
    }
    return s < n ? s - n : s - n + 1;
}

// Indicator by storage slot.
inline double indicator_slot(int s, int n) { return s < n ? -1.0 : 1.0; }

inline bool is_matter_slot(int s, int n) { return s >= n; }

// j -> -j in storage coordinates: reversal of the slot order.
inline int negate_slot(int s, int n) { return 2 * n - 1 - s; }

inline std::string slot_label(int s, int n) {
    const int j = to_signed(s, n);
    return j > 0 ? "+" + std::to_string(j) : std::to_string(j);
}

} // namespace pme
