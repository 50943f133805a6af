#include <doctest.h>

#include <cmath>

#include "modrec/constellation.hpp"

using namespace modrec;

TEST_CASE("qpsk points sit on the unit circle with gray-coded quadrants") {
    const Constellation c = Constellation::qpsk();
    REQUIRE(c.size() == 4);
    REQUIRE(c.bits_per_symbol == 2);

    double energy = 0.0;
    for (const cplx& p : c.points) energy += std::norm(p);
    CHECK(energy / c.size() == doctest::Approx(1.0).epsilon(1e-12));

    const double a = 1.0 / std::sqrt(2.0);
    // first bit picks the real sign, second the imaginary sign; 0 -> +
    CHECK(c.map_bits({0, 0}) == cplx(a, a));
    CHECK(c.map_bits({0, 1}) == cplx(a, -a));
    CHECK(c.map_bits({1, 0}) == cplx(-a, a));
    CHECK(c.map_bits({1, 1}) == cplx(-a, -a));

    // adjacent quadrants differ in exactly one bit (gray property)
    for (int i = 0; i < 4; ++i) {
        const auto bi = c.bits_of_index(i);
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            const auto bj = c.bits_of_index(j);
            int hamming = 0;
            for (int b = 0; b < 2; ++b) hamming += bi[b] != bj[b];
            const double dist = std::abs(c.points[i] - c.points[j]);
            if (dist < 1.5) CHECK(hamming == 1);  // nearest neighbors
        }
    }
}

TEST_CASE("bpsk maps 0 to +1 and 1 to -1") {
    const Constellation c = Constellation::bpsk();
    REQUIRE(c.size() == 2);
    CHECK(c.map_bits({0}) == cplx(1.0, 0.0));
    CHECK(c.map_bits({1}) == cplx(-1.0, 0.0));
}

TEST_CASE("bits round-trip through index_of_bits / bits_of_index") {
    for (const Constellation& c : {Constellation::bpsk(), Constellation::qpsk()}) {
        for (int idx = 0; idx < c.size(); ++idx) {
            const auto bits = c.bits_of_index(idx);
            CHECK(c.index_of_bits(bits) == idx);
            CHECK(c.points[static_cast<std::size_t>(idx)] == c.map_bits(bits));
        }
    }
}

TEST_CASE("nearest recovers every point and breaks ties toward low index") {
    const Constellation c = Constellation::qpsk();
    for (int idx = 0; idx < c.size(); ++idx)
        CHECK(c.nearest(c.points[static_cast<std::size_t>(idx)] * 0.9) == idx);
    // the origin is equidistant from all four points
    CHECK(c.nearest(cplx(0.0, 0.0)) == 0);
}

TEST_CASE("modulate maps each user row independently") {
    const Constellation c = Constellation::qpsk();
    BitBlock blk;
    blk.bits.resize(3, 2);
    blk.bits << 0, 0, 1, 0, 1, 1;
    const Eigen::VectorXcd s = modulate(blk, c);
    REQUIRE(s.size() == 3);
    CHECK(s(0) == c.map_bits({0, 0}));
    CHECK(s(1) == c.map_bits({1, 0}));
    CHECK(s(2) == c.map_bits({1, 1}));
}
