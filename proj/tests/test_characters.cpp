#include "finsler/characters.hpp"
#include "finsler/error.hpp"

#include <doctest.h>

#include <limits>

using namespace finsler;

namespace {

Int off_by_one(int n, int k)
{
    const Int s = cartan_character(n, k);
    return (n >= 5 && k == 2) ? s + 1 : s;
}

} // namespace

TEST_CASE("characters for n = 2")
{
    const auto t = cartan_characters(2);
    CHECK(t.n == 2);
    CHECK(t.s == std::vector<Int>{0, 0, 5, 6, 0});
    CHECK(t.character_sum() == 11);
    CHECK(t.dimK == 11);
    CHECK(t.weighted_sum() == 28);
    CHECK(t.dimK1 == 28);
    CHECK(t.generality == std::pair<Int, Int>{6, 3});
}

TEST_CASE("characters are nonnegative and vanish outside 2..n+1")
{
    for (int n = 2; n <= 12; ++n) {
        const auto t = cartan_characters(n);
        REQUIRE(t.s.size() == static_cast<std::size_t>(2 * n + 1));
        for (int k = 0; k <= 2 * n; ++k) {
            CHECK(t.s[k] >= 0);
            if (k <= 1 || k > n + 1) CHECK(t.s[k] == 0);
        }
        CHECK(t.s[n + 1] == Int(n) * (n + 1));
    }
}

TEST_CASE("involutivity identities")
{
    const auto r12 = verify_involutivity_identities(12);
    CHECK(r12.ok);
    CHECK_FALSE(r12.first_failure.has_value());
    CHECK(r12.checked_up_to == 12);
    CHECK(verify_involutivity_identities(2).ok);

    const auto bad = verify_involutivity_identities(12, off_by_one);
    CHECK_FALSE(bad.ok);
    REQUIRE(bad.first_failure.has_value());
    CHECK(*bad.first_failure == 5);
    CHECK_THROWS_AS(verify_involutivity_identities(1), InvalidArgument);
}

TEST_CASE("generality count")
{
    CHECK(generality_count(2) == std::pair<Int, Int>{6, 3});
    CHECK(generality_count(3) == std::pair<Int, Int>{12, 4});
    CHECK(cartan_character(3, 4) == 12);
    CHECK(generality_count(10) == std::pair<Int, Int>{110, 11});
    CHECK(cartan_character(10, 11) == 110);
    CHECK_THROWS_AS(cartan_characters(1), InvalidArgument);
}

TEST_CASE("binomial coefficients")
{
    CHECK(binomial(0, 0) == 1);
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(5, 7) == 0);
    CHECK(binomial(15, 4) == 1365);
    CHECK(binomial(62, 31) == 465428353255261088LL);
    CHECK(binomial(66, 33) == 7219428434016265740LL);
    CHECK_THROWS_AS(binomial(68, 34), Error);
}
