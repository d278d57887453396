#include "doctest.h"

#include "replisim/rng.hpp"

#include <set>

using namespace replisim;

TEST_SUITE("rng") {

TEST_CASE("same key gives the same sequence")
{
    RngStream a(42, 3, Purpose::Service), b(42, 3, Purpose::Service);
    for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
    CHECK(a.counter() == 1000);
}

TEST_CASE("seed, stream id and purpose each change the sequence")
{
    RngStream base(42, 3, Purpose::Service);
    RngStream other_seed(43, 3, Purpose::Service);
    RngStream other_id(42, 4, Purpose::Service);
    RngStream other_purpose(42, 3, Purpose::Overhead);
    const double x = base.uniform();
    CHECK(x != other_seed.uniform());
    CHECK(x != other_id.uniform());
    CHECK(x != other_purpose.uniform());
}

TEST_CASE("uniforms stay strictly inside (0, 1) and are roughly uniform")
{
    RngStream s(7, 0, Purpose::Arrival);
    double sum = 0.0;
    int low = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        low += u < 0.25;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(static_cast<double>(low) / n == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("accessors report the key")
{
    RngStream s(11, 5, Purpose::Due);
    CHECK(s.seed() == 11);
    CHECK(s.stream_id() == 5);
    CHECK(s.purpose() == Purpose::Due);
    CHECK(s.counter() == 0);
}

}
