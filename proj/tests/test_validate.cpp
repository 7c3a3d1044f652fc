#include "kvlink/validate.hpp"

#include <doctest.h>

using namespace kvlink;

TEST_CASE("fast criteria pass on the real constants") {
    validate::Options o;
    o.only = {1, 2, 3, 4, 5};
    const auto r = validate::run(o);
    REQUIRE(r.results.size() == 5);
    for (const auto& c : r.results) {
        INFO(c.id << ": " << c.detail);
        CHECK(c.passed);
    }
    CHECK(r.to_json()["criteria"].size() == 5);
}

TEST_CASE("a corrupted k2 fails the constant check") {
    validate::Options o;
    o.only = {1};
    auto k = derive_constants(ModelSpec::llama_7b());
    k.k2 += 4096;
    o.constants_override = k;
    const auto r = validate::run(o);
    REQUIRE(r.results.size() == 1);
    CHECK_FALSE(r.results[0].passed);
    CHECK_FALSE(r.all_passed());
    CHECK(r.to_text().find("criterion  1 FAIL") != std::string::npos);
}

TEST_CASE("the report lists runtime per criterion") {
    validate::Options o;
    o.only = {2};
    const auto r = validate::run(o);
    REQUIRE(r.results.size() == 1);
    CHECK(r.results[0].seconds >= 0.0);
    CHECK(r.to_json()["criteria"][0].contains("seconds"));
}
