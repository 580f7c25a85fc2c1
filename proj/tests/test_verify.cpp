#include "doctest.h"

#include "finslercaps/errors.hpp"
#include "finslercaps/verify.hpp"

using namespace finslercaps;

namespace {

void check_identical(const SuiteResult& a, const SuiteResult& b) {
    CHECK(a.name == b.name);
    CHECK(a.trials == b.trials);
    CHECK(a.violations == b.violations);
    CHECK(a.max_error == b.max_error);
    CHECK(a.passed == b.passed);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].first == b.metrics[i].first);
        CHECK(a.metrics[i].second == b.metrics[i].second);
    }
}

} // namespace

TEST_CASE("suite registry") {
    const auto& names = suite_names();
    CHECK(names.size() == 8);
    CHECK(names.front() == "convex");
    CHECK_THROWS_AS(run_suite("nonsense"), DomainError);
    CHECK_THROWS_AS(run_suites("al"), DomainError);
}

TEST_CASE("suites pass and are independent of the execution mode") {
    for (const char* name : {"convex", "capacity", "legendre", "geodesic", "radial", "symplectic", "squeeze"}) {
        const std::string suite = name;
        CAPTURE(suite);
        const auto a = run_suite(name, {3, Exec::Serial});
        const auto b = run_suite(name, {3, Exec::Parallel});
        CHECK(a.passed);
        CHECK(a.violations == 0);
        CHECK(a.trials > 0);
        check_identical(a, b);
    }
}

TEST_CASE("seed changes the randomized trials") {
    const auto a = run_suite("convex", {1, Exec::Serial});
    const auto b = run_suite("convex", {2, Exec::Serial});
    CHECK(a.passed);
    CHECK(b.passed);
    CHECK(a.max_error != b.max_error);
}
