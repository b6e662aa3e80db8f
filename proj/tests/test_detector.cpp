#include <cmath>
#include <limits>

#include "doctest.h"
#include "qcd/detector.hpp"

using namespace qcd;

TEST_CASE("cusum recursion examples") {
    DetectorState s;
    s.W = -2.0;
    CHECK(cusum_step(s, 0.7) == doctest::Approx(0.7));
    s.W = 3.0;
    CHECK(cusum_step(s, -0.5) == doctest::Approx(2.5));

    DetectorState t;
    const double llrs[] = {1.0, -3.0, 2.0};
    const double expected[] = {1.0, -2.0, 2.0};
    for (int i = 0; i < 3; ++i) CHECK(cusum_step(t, llrs[i]) == doctest::Approx(expected[i]));
}

TEST_CASE("cusum rejects non-finite increments") {
    DetectorState s;
    CHECK_THROWS_AS(cusum_step(s, std::numeric_limits<double>::infinity()), DetectorError);
    CHECK_THROWS_AS(cusum_step(s, std::numeric_limits<double>::quiet_NaN()), DetectorError);
}

TEST_CASE("Shiryaev-Roberts recursion and saturation") {
    DetectorState s;
    CHECK(sr_step(s, 1.0) == 2.0);
    s.R = 0.0;
    CHECK(sr_step(s, 2.0) == 2.0);
    s.R = 1e299;
    sr_step(s, 1e10);
    CHECK(s.R == kSrSaturation);
    CHECK(s.sr_saturated);
}

TEST_CASE("stopping rule") {
    const DetectorSpec cusum{DetectorSpec::Kind::WindowedCusum, 2.0, 10};
    DetectorState s;
    s.W = 2.0;
    CHECK(should_stop(cusum, s, 11));
    s.W = 7.0;
    CHECK_FALSE(should_stop(cusum, s, 10));
    s.W = 1.999;
    CHECK_FALSE(should_stop(cusum, s, 50));

    const DetectorSpec greedy{DetectorSpec::Kind::GreedySingleChannel, 2.0, 0};
    DetectorState g;
    g.W = 1.5;
    CHECK_FALSE(should_stop(greedy, g, 3));
    g.W = 2.1;
    CHECK(should_stop(greedy, g, 4));

    const DetectorSpec sr{DetectorSpec::Kind::ShiryaevRoberts, std::log(100.0), 0};
    DetectorState r;
    r.R = 99.0;
    CHECK_FALSE(should_stop(sr, r, 5));
    r.R = 100.0;
    CHECK(should_stop(sr, r, 5));
}

TEST_CASE("threshold from the false-alarm target") {
    CHECK(threshold_for_mtfa(std::exp(1.0)) == doctest::Approx(1.0));
    CHECK(threshold_for_mtfa(1e6) == doctest::Approx(13.815510557964274));
    CHECK(threshold_for_mtfa(10.0) == doctest::Approx(2.302585093));
    CHECK_THROWS_AS(threshold_for_mtfa(1.0), std::domain_error);
    CHECK_THROWS_AS(threshold_for_mtfa(0.5), std::domain_error);
}

TEST_CASE("detector validation") {
    CHECK_THROWS_AS(validate_detector(DetectorSpec{DetectorSpec::Kind::WindowedCusum, 0.0, 1}), std::domain_error);
    CHECK_THROWS_AS(validate_detector(DetectorSpec{DetectorSpec::Kind::WindowedCusum,
                                                   std::numeric_limits<double>::infinity(), 1}),
                    std::domain_error);
    CHECK_NOTHROW(validate_detector(DetectorSpec{DetectorSpec::Kind::WindowedCusum, 1e-3, 1}));
    CHECK(detector_kind_name(DetectorSpec::Kind::ShiryaevRoberts) == "shiryaev_roberts");
}
