#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stq/errors.hpp"
#include "stq/schedule.hpp"

using namespace stq;

TEST_SUITE("schedule") {

TEST_CASE("flat-top waveform") {
    FluxSchedule s(20.0);
    s.flat_top("Q", 2.0, 18.0, 0.1, 0.3, 4.0);
    CHECK(s.sample(0.0).at("Q") == doctest::Approx(0.1));
    CHECK(s.sample(2.0).at("Q") == doctest::Approx(0.1));
    CHECK(s.sample(4.0).at("Q") == doctest::Approx(0.2));
    CHECK(s.sample(3.0).at("Q") == doctest::Approx(0.1 + 0.2 * 0.5 * (1.0 - std::cos(std::numbers::pi / 4.0))));
    CHECK(s.sample(10.0).at("Q") == doctest::Approx(0.3));
    CHECK(s.sample(16.0).at("Q") == doctest::Approx(0.2));
    CHECK(s.sample(19.0).at("Q") == doctest::Approx(0.1));
    CHECK(s.breakpoints() == std::vector<double>{0.0, 2.0, 6.0, 14.0, 18.0, 20.0});
    CHECK(s.constant_between(6.0, 14.0));
    CHECK_FALSE(s.constant_between(2.0, 6.0));
    CHECK(s.constant_between(18.0, 20.0));
}

TEST_CASE("holds values between segments") {
    FluxSchedule s(10.0);
    s.linear_ramp("A", 2.0, 4.0, 0.0, 0.2).constant("A", 6.0, 8.0, 0.4);
    CHECK(s.sample(1.0).at("A") == doctest::Approx(0.0));
    CHECK(s.sample(3.0).at("A") == doctest::Approx(0.1));
    CHECK(s.sample(5.0).at("A") == doctest::Approx(0.2));
    CHECK(s.sample(9.0).at("A") == doctest::Approx(0.4));
    CHECK(s.modes() == std::vector<std::string>{"A"});
}

TEST_CASE("invalid segments") {
    FluxSchedule s(10.0);
    s.constant("A", 0.0, 5.0, 0.1);
    CHECK_THROWS_AS(s.constant("A", 4.0, 6.0, 0.1), InputError);
    CHECK_THROWS_AS(s.constant("A", 6.0, 11.0, 0.1), InputError);
    CHECK_THROWS_AS(s.flat_top("B", 0.0, 4.0, 0.0, 0.1, 3.0), InputError);
    CHECK_THROWS_AS(s.constant("B", 0.0, 1.0, std::nan("")), InputError);
    CHECK_THROWS_AS(FluxSchedule(-1.0), InputError);
}

}
