#include "doctest.h"

#include <algorithm>

#include "exitrate/config.hpp"
#include "exitrate/io.hpp"

using namespace exitrate;

namespace {

const char* kMinimal = R"({
  "system": {"A": [[-1.0]], "B": [[[1.0]]]},
  "feedback_candidates": [[[[0.0]]]],
  "domain": {"box": {"lower": [-1.0], "upper": [1.0]}},
  "diffusion": {"base": [[1.0]]},
  "controls": [{"lower": [-1.0], "upper": [1.0]}],
  "epsilon": 0.5
})";

bool mentions(const ConfigError& e, const std::string& needle) {
    return std::any_of(e.issues().begin(), e.issues().end(), [&](const std::string& s) {
        return s.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_CASE("minimal 1-D configuration parses") {
    const RunConfig cfg = parse_config(kMinimal);
    CHECK(cfg.system.dim() == 1);
    CHECK(cfg.feedback_candidates.size() == 1);
    CHECK(cfg.epsilons == std::vector<double>{0.5});
    CHECK(cfg.domain.is_box());
    CHECK(cfg.run.sim.samples == 10000); // defaults fill in
    CHECK(cfg.run.x0.size() == 1);
}

TEST_CASE("negative epsilon names the key") {
    std::string text = kMinimal;
    text.replace(text.find("\"epsilon\": 0.5"), 14, "\"epsilon\": -0.5");
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "epsilon"));
    }
}

TEST_CASE("channel dimension mismatch names the channel") {
    const char* text = R"({
      "system": {"A": [[-1.0, 0.0], [0.0, -1.0]], "B": [[[1.0], [0.0]], [[1.0]]]},
      "feedback_candidates": [[[[0.0, 0.0]], [[0.0, 0.0]]]],
      "domain": {"box": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0]}},
      "diffusion": {"base": [[1.0, 0.0], [0.0, 1.0]]},
      "controls": [{"lower": [-1.0], "upper": [1.0]}, {"lower": [-1.0], "upper": [1.0]}],
      "epsilon": 0.5
    })";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "B_2"));
    }
}

TEST_CASE("unknown keys are rejected with their path") {
    std::string text = kMinimal;
    text.insert(text.find("\"system\""), "\"tpyo\": 1, ");
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "tpyo"));
        CHECK(mentions(e, "unknown key"));
    }
}

TEST_CASE("all problems are reported at once") {
    const char* text = R"({
      "system": {"A": [[-1.0]], "B": [[[1.0]]]},
      "feedback_candidates": [[[[0.0]]]],
      "domain": {"box": {"lower": [1.0], "upper": [-1.0]}},
      "diffusion": {"base": [[0.0]]},
      "controls": [{"lower": [-1.0], "upper": [1.0]}],
      "epsilon": -2.0
    })";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() >= 3);
        CHECK(mentions(e, "epsilon"));
        CHECK(mentions(e, "domain"));
        CHECK(mentions(e, "diffusion"));
    }
}

TEST_CASE("syntax errors carry position information") {
    CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
}

TEST_CASE("x0 outside the domain is rejected") {
    std::string text = kMinimal;
    text.insert(text.rfind('}'), R"(, "run": {"x0": [5.0]})");
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "run.x0"));
    }
}

TEST_CASE("double formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.467401100272339, 1e-300, 12345.0, -0.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("sha256 known vector") {
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("csv quoting and shape") {
    CsvWriter csv({"a", "b"});
    csv.row({1.5, "plain"});
    csv.row({2.0, "with,comma"});
    CHECK(csv.str() == "a,b\n1.5,plain\n2,\"with,comma\"\n");
    CHECK_THROWS_AS(csv.row({1.0}), PreconditionError);
}
