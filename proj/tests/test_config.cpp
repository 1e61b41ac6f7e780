#include <doctest.h>

#include "turbmit/config.hpp"
#include "turbmit/pipeline.hpp"

using namespace turbmit;

TEST_SUITE_BEGIN("config");

TEST_CASE("default config dumps and re-parses identically") {
    const PipelineConfig def = default_config();
    const std::string text = dump_config(def);
    const PipelineConfig back = parse_config_text(text);
    CHECK(dump_config(back) == text);
    CHECK(back.seed == def.seed);
    CHECK(back.optics.cn2 == def.optics.cn2);
    CHECK(back.deconv.lambda == def.deconv.lambda);
}

TEST_CASE("unknown keys are rejected with the offending path") {
    CHECK_THROWS_WITH_AS(parse_config_text("{\"optics\": {\"apreture\": 0.1}}"),
                         doctest::Contains("apreture"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("{\"bogus\": 1}"), doctest::Contains("bogus"),
                         std::invalid_argument);
}

TEST_CASE("type and range violations are rejected") {
    CHECK_THROWS_AS(parse_config_text("{\"threads\": 0}"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("{\"optics\": {\"phase_grid\": 48}}"), std::invalid_argument);  // not pow2
    CHECK_THROWS_AS(parse_config_text("{\"deconv\": {\"lambda\": -1.0}}"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("{\"deconv\": {\"denoiser\": \"bm25\"}}"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("not json"), std::invalid_argument);
}

TEST_CASE("dr0 override rewrites cn2") {
    const PipelineConfig cfg = parse_config_text("{\"dr0\": 2.5}");
    CHECK(cfg.resolved_dr0() == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("frame spec parsing") {
    CHECK(parse_frame_spec("all", 4) == std::vector<int>{0, 1, 2, 3});
    CHECK(parse_frame_spec("center", 11) == std::vector<int>{5});
    CHECK(parse_frame_spec("1,3", 5) == std::vector<int>{1, 3});
    CHECK_THROWS_AS(parse_frame_spec("9", 5), std::invalid_argument);
}

TEST_SUITE_END();
