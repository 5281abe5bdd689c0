#include <doctest.h>

#include <cmath>

#include "rcollatz/errors.hpp"
#include "rcollatz/reach.hpp"

using namespace rcollatz;

TEST_CASE("predecessor examples") {
    auto p = predecessor(std::uint64_t{3});
    REQUIRE(p);
    CHECK(p->state.is_one());
    CHECK(p->xi == 3);

    p = predecessor(std::uint64_t{5});
    CHECK(p->state == OddInt::from_u64(3));
    CHECK(p->xi == 1);

    p = predecessor(std::uint64_t{7});
    CHECK(p->state == OddInt::from_u64(3));
    CHECK(p->xi == 5);

    p = predecessor(std::uint64_t{9});
    CHECK(p->state == OddInt::from_u64(5));
    CHECK(p->xi == 3);

    CHECK_FALSE(predecessor(std::uint64_t{1}));
    CHECK_FALSE(predecessor(OddInt{}));
    CHECK_THROWS_AS(predecessor(std::uint64_t{4}), ContractViolation);
}

TEST_CASE("path to 5") {
    const PathCertificate c = path_from_one(OddInt::from_u64(5));
    REQUIRE(c.length() == 2);
    CHECK(c.steps[0].state.is_one());
    CHECK(c.steps[0].xi == 3);
    CHECK(c.steps[1].state == OddInt::from_u64(3));
    CHECK(c.steps[1].xi == 1);
    CHECK(c.probability == Rational(1, 16));
    CHECK(verify_certificate(c).ok);
}

TEST_CASE("path to 27") {
    const PathCertificate c = path_from_one(OddInt::from_u64(27));
    REQUIRE(c.length() == 5);
    const std::uint64_t states[] = {1, 3, 7, 11, 17};
    const std::int64_t xis[] = {3, 5, 1, 1, 3};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(c.steps[i].state == OddInt::from_u64(states[i]));
        CHECK(c.steps[i].xi == xis[i]);
    }
    CHECK(c.probability == Rational(1, 1024));
    CHECK(certificate_to_json(c).dump() ==
          R"({"prob":"1/1024","steps":[{"state":"1","xi":3},{"state":"3","xi":5},)"
          R"({"state":"7","xi":1},{"state":"11","xi":1},{"state":"17","xi":3}],"target":"27"})");
}

TEST_CASE("every odd m up to 10^5 has a verified increasing path of bounded length") {
    for (std::uint64_t m = 3; m <= 100'000; m += 2) {
        const PathCertificate c = path_from_one(OddInt::from_u64(m));
        const CertificateCheck check = verify_certificate(c);
        REQUIRE_MESSAGE(check.ok, "m = " << m << ": " << check.reason);
        const double lm = std::log(static_cast<double>(m));
        // each step multiplies the state by between 3/2 and 5
        REQUIRE(static_cast<double>(c.length()) >= lm / std::log(5.0) - 1e-9);
        REQUIRE(static_cast<double>(c.length()) <= lm / std::log(1.5) + 1);
        REQUIRE(c.probability == Rational(1, 1) / (mpz_class(1) << (2 * c.length())));
    }
}

TEST_CASE("target 1 has the empty certificate") {
    const PathCertificate c = path_from_one(OddInt{});
    CHECK(c.length() == 0);
    CHECK(c.probability == 1);
    CHECK(verify_certificate(c).ok);
}

TEST_CASE("tampered certificates report the failing step") {
    PathCertificate c = path_from_one(OddInt::from_u64(27));
    c.steps[2].xi = 3;
    CertificateCheck check = verify_certificate(c);
    CHECK_FALSE(check.ok);
    CHECK(check.failing_index == 2);

    c = path_from_one(OddInt::from_u64(27));
    c.steps[0].state = OddInt::from_u64(3);
    check = verify_certificate(c);
    CHECK_FALSE(check.ok);
    CHECK(check.failing_index == 0);

    c = path_from_one(OddInt::from_u64(27));
    c.probability = Rational(1, 2);
    check = verify_certificate(c);
    CHECK_FALSE(check.ok);
    CHECK(check.failing_index == 5);

    c = path_from_one(OddInt::from_u64(27));
    c.target = OddInt::from_u64(29);
    CHECK(verify_certificate(c).failing_index == 4);
}

TEST_CASE("laws without 1, 3 and 5 are refused") {
    CHECK_THROWS_AS(path_from_one(OddInt::from_u64(27), make_one_three()), ContractViolation);
    CHECK_THROWS_AS(path_from_one(OddInt::from_u64(27), make_pm1()), ContractViolation);
}

TEST_CASE("probability follows the law") {
    const PathCertificate c = path_from_one(OddInt::from_u64(27), make_one_three_five());
    CHECK(c.probability == Rational(1, 243));
    CHECK(verify_certificate(c, make_one_three_five()).ok);
    CHECK_FALSE(verify_certificate(c).ok);
}

TEST_CASE("targets beyond 2^64 use the big-integer path") {
    const OddInt m = OddInt::parse("1267650600228229401496703205653");  // 2^100 + 21
    const PathCertificate c = path_from_one(m);
    CHECK(verify_certificate(c).ok);
    CHECK(c.length() >= 43);   // 100 ln 2 / ln 5
    CHECK(c.length() <= 172);  // 100 ln 2 / ln 1.5 + 1
    CHECK(c.steps.front().state.is_one());
}
