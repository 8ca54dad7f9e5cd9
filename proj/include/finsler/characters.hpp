#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace finsler {

using Int = std::int64_t;

/// Binomial coefficient by the multiplicative formula; throws Error on
/// overflow of a signed 64-bit integer.
Int binomial(Int n, Int k);

/// Cartan characters of the constant flag curvature tableau in dimension n + 1.
struct CharacterTable {
    int n = 0;
    std::vector<Int> s; ///< s[k] for k = 0..2n
    Int dimK = 0;       ///< C(n+1,2) + n C(n+2,3)
    Int dimK1 = 0;      ///< 2 C(n+2,3) + 2n C(n+3,4)
    std::pair<Int, Int> generality{0, 0};

    Int character_sum() const;  ///< s_2 + ... + s_{n+1}
    Int weighted_sum() const;   ///< sum k s_k
};

/// s_k = k - 1 + n (n + (k - 2)(n + 1 - k)) for 2 <= k <= n + 1, zero otherwise.
Int cartan_character(int n, int k);

CharacterTable cartan_characters(int n);

/// Character formula used by the identity checks; tests inject mutations.
using CharacterFormula = Int (*)(int n, int k);

struct IdentityReport {
    bool ok = true;
    std::optional<int> first_failure; ///< smallest n at which an identity fails
    int checked_up_to = 0;
};

/// Checks sum s_k = dimK and sum k s_k = dimK1 exactly for 2 <= n <= n_max.
IdentityReport verify_involutivity_identities(int n_max, CharacterFormula formula = cartan_character);

/// (n(n+1), n+1); throws Error unless s_{n+1} = n(n+1).
std::pair<Int, Int> generality_count(int n);

} // namespace finsler
