#include "finsler/characters.hpp"

#include "finsler/error.hpp"

#include <numeric>
#include <string>

namespace finsler {

namespace {

void require_n(int n)
{
    if (n < 2) throw InvalidArgument("character arithmetic needs n >= 2, got " + std::to_string(n));
}

Int checked_mul(Int a, Int b)
{
    Int out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw Error("integer overflow in character arithmetic");
    return out;
}

Int checked_add(Int a, Int b)
{
    Int out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw Error("integer overflow in character arithmetic");
    return out;
}

Int dim_k(Int n) { return checked_add(binomial(n + 1, 2), checked_mul(n, binomial(n + 2, 3))); }

Int dim_k1(Int n)
{
    return checked_add(checked_mul(2, binomial(n + 2, 3)), checked_mul(2 * n, binomial(n + 3, 4)));
}

} // namespace

Int binomial(Int n, Int k)
{
    if (k < 0 || n < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    Int r = 1;
    for (Int i = 1; i <= k; ++i) {
        // r * (n - k + i) is divisible by i; cancel the common factor first
        // so the product only overflows when the result does.
        const Int g = std::gcd(r, i);
        r = checked_mul(r / g, (n - k + i) / (i / g));
    }
    return r;
}

Int cartan_character(int n, int k)
{
    if (k < 2 || k > n + 1) return 0;
    const Int nn = n, kk = k;
    return checked_add(kk - 1, checked_mul(nn, checked_add(nn, checked_mul(kk - 2, nn + 1 - kk))));
}

Int CharacterTable::character_sum() const
{
    Int total = 0;
    for (Int v : s) total = checked_add(total, v);
    return total;
}

Int CharacterTable::weighted_sum() const
{
    Int total = 0;
    for (std::size_t k = 0; k < s.size(); ++k) total = checked_add(total, checked_mul(static_cast<Int>(k), s[k]));
    return total;
}

CharacterTable cartan_characters(int n)
{
    require_n(n);
    CharacterTable t;
    t.n = n;
    t.s.resize(static_cast<std::size_t>(2 * n + 1));
    for (int k = 0; k <= 2 * n; ++k) t.s[k] = cartan_character(n, k);
    t.dimK = dim_k(n);
    t.dimK1 = dim_k1(n);
    t.generality = generality_count(n);
    return t;
}

IdentityReport verify_involutivity_identities(int n_max, CharacterFormula formula)
{
    require_n(n_max);
    IdentityReport report;
    for (int n = 2; n <= n_max; ++n) {
        Int sum = 0, weighted = 0;
        for (int k = 0; k <= 2 * n; ++k) {
            const Int s = formula(n, k);
            sum = checked_add(sum, s);
            weighted = checked_add(weighted, checked_mul(k, s));
        }
        report.checked_up_to = n;
        if (sum != dim_k(n) || weighted != dim_k1(n)) {
            report.ok = false;
            report.first_failure = n;
            return report;
        }
    }
    return report;
}

std::pair<Int, Int> generality_count(int n)
{
    require_n(n);
    const Int functions = checked_mul(n, n + 1);
    if (cartan_character(n, n + 1) != functions) {
        throw Error("last nonzero character differs from n(n+1) at n = " + std::to_string(n));
    }
    return {functions, n + 1};
}

} // namespace finsler
