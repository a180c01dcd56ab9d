#include "hetlink/config.hpp"
#include "hetlink/errors.hpp"
#include "hetlink/rng.hpp"
#include "hetlink/text.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

using namespace hetlink;

TEST_CASE("format_double round-trips bit for bit") {
    auto rng = make_rng(7);
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t bits = rng();
        double x;
        std::memcpy(&x, &bits, sizeof x);
        if (!std::isfinite(x)) continue;
        double back = 0;
        REQUIRE(parse_double(format_double(x), back));
        CHECK(std::memcmp(&x, &back, sizeof x) == 0);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("format_fixed rounds and drops negative zero") {
    CHECK(format_fixed(0.8543, 3) == "0.854");
    CHECK(format_fixed(-0.0001, 3) == "0.000");
    CHECK(format_fixed(1.0, 2) == "1.00");
}

TEST_CASE("strict numeric parsing") {
    double d = 0;
    long long n = 0;
    CHECK(parse_double(" 2.5 ", d));
    CHECK(d == 2.5);
    CHECK(parse_double("inf", d));
    CHECK(std::isinf(d));
    CHECK_FALSE(parse_double("2.5x", d));
    CHECK_FALSE(parse_double("", d));
    CHECK(parse_int("+42", n));
    CHECK(n == 42);
    CHECK_FALSE(parse_int("4.2", n));
}

TEST_CASE("split trim join") {
    CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    CHECK(split("", ',') == std::vector<std::string>{""});
    CHECK(trim("  x y\t\n") == "x y");
    CHECK(join({"a", "b", "c"}, "; ") == "a; b; c");
}

TEST_CASE("config parsing and typed getters") {
    auto cfg = Config::parse("# comment\n\n a = 1 \nb=true\nc=x\nd=0.25\n");
    CHECK(cfg.get_int("a", 0) == 1);
    CHECK(cfg.get_bool("b", false));
    CHECK(cfg.get_double("d", 0) == 0.25);
    CHECK(cfg.get_int("missing", 9) == 9);
    CHECK(cfg.unused_keys() == std::vector<std::string>{"c"});
    CHECK_THROWS_AS(cfg.get_int("c", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_bool("c", false), ConfigError);
    CHECK_THROWS_AS(Config::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("=3\n"), ConfigError);
    CHECK_THROWS_AS(Config::load("/nonexistent/dir/x.cfg"), ConfigError);
}

TEST_CASE("config rendering is sorted and reparses") {
    Config cfg;
    cfg.set("z", "1");
    cfg.set("a", "two");
    CHECK(cfg.to_string() == "a=two\nz=1\n");
    CHECK(Config::parse(cfg.to_string()).values() == cfg.values());
}

TEST_CASE("derived seeds separate streams") {
    CHECK(derive_seed(1, {2}) != derive_seed(1, {3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(5, {1}) == derive_seed(5, {1}));
    auto rng = make_rng(3);
    for (int i = 0; i < 1000; ++i) {
        double u = uniform01(rng);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(uniform_index(rng, 7) < 7);
    }
}
