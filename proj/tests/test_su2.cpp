#include "doctest.h"
#include "qkdsim/errors.hpp"
#include "qkdsim/su2.hpp"

using namespace qkdsim;

TEST_CASE("toeplitz row i reads a[i .. i+in_len-1]") {
    // a = 1011, in_len 3: row 0 = 101, row 1 = 011.
    const BitString a = BitString::from_string("1011");
    // rows dot 101: 1*1+0*0+1*1 = 0 and 0*1+1*0+1*1 = 1.
    CHECK(toeplitz_apply(a, BitString::from_string("101"), 2).to_string() == "01");
    CHECK_THROWS_AS(toeplitz_apply(a, BitString::from_string("1011"), 2),
                    contract_error);
}

TEST_CASE("eval_su2 frozen example") {
    const Su2Key key{BitString::from_string("1011"), BitString::from_string("01")};
    CHECK(key.in_len() == 3);
    CHECK(key.out_len() == 2);
    // T_a * 101 = (1*1+0*0+1*1, 0*1+1*0+1*1) = (0,1); XOR b=01 -> 00.
    CHECK(eval_su2(key, BitString::from_string("101")).to_string() == "00");
    CHECK_THROWS_AS(eval_su2(key, BitString::from_string("10")), contract_error);
}

TEST_CASE("affine part shifts the output") {
    const Su2Key key{BitString::from_string("1011"), BitString::from_string("00")};
    const Su2Key shifted{BitString::from_string("1011"), BitString::from_string("11")};
    const BitString z = BitString::from_string("110");
    CHECK((eval_su2(key, z) ^ BitString::from_string("11")) == eval_su2(shifted, z));
}

TEST_CASE("drawn keys have the advertised shape") {
    Rng rng(7);
    const Su2Key key = draw_su2_key(rng, 5, 3);
    CHECK(key.a.size() == 7);
    CHECK(key.b.size() == 3);
    CHECK(key.in_len() == 5);
}

TEST_CASE("family counting is exact for small spaces") {
    SUBCASE("r=2 n=1") {
        const Su2VerificationReport rep = verify_su2_family(2, 1);
        CHECK(rep.family_size == 8);       // 2^(2*1 + 2 - 1)
        CHECK(rep.expected_count == 2);    // 8 / 2^2
        CHECK(rep.cells == 48);            // 4*3 ordered pairs * 4 tag pairs
        CHECK(rep.min_count == 2);
        CHECK(rep.max_count == 2);
        CHECK(rep.exact);
    }
    SUBCASE("r=3 n=2") {
        const Su2VerificationReport rep = verify_su2_family(3, 2);
        CHECK(rep.family_size == 64);      // 2^(2*2 + 3 - 1)
        CHECK(rep.expected_count == 4);    // 64 / 2^4
        CHECK(rep.cells == 896);           // 8*7 ordered pairs * 16 tag pairs
        CHECK(rep.exact);
    }
}

TEST_CASE("oversized family verification is guarded") {
    CHECK_THROWS_AS(verify_su2_family(12, 6), guard_error);
}
