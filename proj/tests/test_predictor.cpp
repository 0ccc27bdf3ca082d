#include <cmath>
#include <string>

#include "doctest.h"
#include "grounder/errors.hpp"
#include "grounder/predictor.hpp"
#include "grounder/rng.hpp"

using namespace grounder;

namespace {

GroundingQuery query_for(std::string id, ImageDims dims) {
    GroundingQuery q;
    q.id = std::move(id);
    q.instruction = "open settings";
    q.image = "synth://x.png";
    q.dims = dims;
    return q;
}

SimulatedPredictor sim_with(const BBox& gt, SimPredictorConfig cfg) {
    return SimulatedPredictor(cfg, [gt](std::string_view) { return std::optional<BBox>(gt); });
}

}  // namespace

TEST_CASE("parse_model_output examples") {
    const auto a = parse_model_output("<think>top right</think> (812, 44)");
    REQUIRE(a);
    CHECK(a->reasoning == "top right");
    CHECK(a->coord == PixelCoord{812, 44});

    const auto b = parse_model_output("(10,20)");
    REQUIRE(b);
    CHECK(b->reasoning.empty());
    CHECK(b->coord == PixelCoord{10, 20});

    CHECK_FALSE(parse_model_output("click the button").has_value());
}

TEST_CASE("parse_model_output variants") {
    CHECK(parse_model_output("<think>x</think>[3.5, -2]")->coord == PixelCoord{3.5, -2});
    CHECK(parse_model_output("<think>a</think>1,2")->coord == PixelCoord{1, 2});
    // Coordinates inside the reasoning are ignored.
    const auto p = parse_model_output("<think>not (1, 1)</think> (7, 8)");
    REQUIRE(p);
    CHECK(p->coord == PixelCoord{7, 8});
    CHECK_FALSE(parse_model_output("<think>only (1, 1)</think> nothing").has_value());
    CHECK_FALSE(parse_model_output("").has_value());
    CHECK_FALSE(parse_model_output("(12,)").has_value());
}

TEST_CASE("scan_think_tags") {
    const auto s = scan_think_tags("<think>a<think>b</think></think>(1,2)");
    CHECK(s.balanced);
    CHECK(s.top_level_spans == 1);
    REQUIRE(s.first);
    CHECK(s.first->open == 0);

    CHECK_FALSE(scan_think_tags("<think>a(1,2)").balanced);
    CHECK_FALSE(scan_think_tags("</think>").balanced);
    CHECK(scan_think_tags("<think>a</think><think>b</think>").top_level_spans == 2);
}

TEST_CASE("parse_model_output never throws on fuzzed text") {
    Rng rng(4);
    const std::string alphabet = "<>/thinkTHINK()[],.-+0123456789 e\n";
    for (int i = 0; i < 20000; ++i) {
        std::string s;
        const auto len = rng.uniform_int(0, 60);
        for (int k = 0; k < len; ++k) {
            s += alphabet[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1))];
        }
        if (i % 5 == 0) s = "<think>" + s;
        CHECK_NOTHROW((void)parse_model_output(s));
        CHECK_NOTHROW((void)scan_think_tags(s));
    }
}

TEST_CASE("render_completion round-trips through the parser") {
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
        const PixelCoord c{rng.uniform(0, 4000), rng.uniform(0, 4000)};
        const auto p = parse_model_output(render_completion("why", c));
        REQUIRE(p);
        CHECK(p->coord == c);
        CHECK(p->reasoning == "why");
    }
}

TEST_CASE("simulated predictor examples") {
    SimPredictorConfig cfg;
    cfg.noise_sigma_frac = 0.0;
    auto sim = sim_with({490, 290, 510, 310}, cfg);
    const auto q = query_for("r1", {1000, 1000});
    const auto slots = sample_predictions(q, 3, 1.0, sim);
    REQUIRE(slots.size() == 3);
    for (const auto& s : slots) {
        REQUIRE(s.ok());
        CHECK(s.sample->coord == PixelCoord{500, 300});
    }

    SimPredictorConfig noisy;
    noisy.rng_seed = 9;
    auto a = sim_with({490, 290, 510, 310}, noisy);
    auto b = sim_with({490, 290, 510, 310}, noisy);
    const auto x = sample_predictions(q, 16, 1.0, a);
    const auto y = sample_predictions(q, 16, 1.0, b);
    REQUIRE(x.size() == 16);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].raw == y[i].raw);

    CHECK_THROWS_AS(sample_predictions(q, 0, 1.0, a), InvalidConfig);
    CHECK_THROWS_AS(sample_predictions(q, 1, -1.0, a), InvalidConfig);
}

TEST_CASE("simulated predictor rejects unknown ids") {
    SimulatedPredictor sim(SimPredictorConfig{}, [](std::string_view) { return std::optional<BBox>{}; });
    CHECK_THROWS_AS(sim.sample(query_for("nope", {100, 100}), 1, 1.0), PredictorUnavailable);
}

TEST_CASE("simulated predictor answers in the crop frame") {
    SimPredictorConfig cfg;
    cfg.noise_sigma_frac = 0.0;
    auto sim = sim_with({490, 290, 510, 310}, cfg);
    auto q = query_for("r", {2000, 2000});
    q.region = RoI{{400, 200}, {840, 840}};
    for (const auto& s : sim.sample(q, 4, 1.0)) CHECK(s.sample->coord == PixelCoord{100, 100});

    // Target not visible in the crop: guesses stay inside the crop frame.
    q.region = RoI{{1000, 1000}, {500, 500}};
    for (const auto& s : sim.sample(q, 50, 1.0)) {
        CHECK(point_within(s.sample->coord, ImageDims{500, 500}));
    }
}

TEST_CASE("simulate_sample Monte-Carlo moments") {
    const ImageDims frame{1000, 1000};
    const BBox gt{490, 490, 510, 510};
    constexpr int kDraws = 100000;

    SUBCASE("zero noise hits the center") {
        Rng rng(1);
        SimPredictorConfig cfg;
        cfg.noise_sigma_frac = 0.0;
        CHECK(simulate_sample(gt, frame, cfg, 1.0, rng).coord == PixelCoord{500, 500});
    }
    SUBCASE("all outliers are uniform over the frame") {
        SimPredictorConfig cfg;
        cfg.outlier_rate = 0.999999;
        Rng rng(2);
        double sx = 0, sy = 0;
        for (int i = 0; i < kDraws; ++i) {
            const auto c = simulate_sample({10, 10, 20, 20}, frame, cfg, 1.0, rng).coord;
            sx += c.x;
            sy += c.y;
        }
        CHECK(std::abs(sx / kDraws - 500) < 5.0);
        CHECK(std::abs(sy / kDraws - 500) < 5.0);
    }
    SUBCASE("Gaussian spread matches sigma") {
        SimPredictorConfig cfg;
        cfg.noise_sigma_frac = 0.02;
        Rng rng(3);
        double sx = 0, sy = 0, sxx = 0, syy = 0;
        int inside = 0;
        for (int i = 0; i < kDraws; ++i) {
            const auto c = simulate_sample(gt, frame, cfg, 1.0, rng).coord;
            sx += c.x;
            sy += c.y;
            sxx += c.x * c.x;
            syy += c.y * c.y;
            if (std::hypot(c.x - 500, c.y - 500) <= 3.035 * 20) ++inside;  // chi(2) 99.0%
        }
        const double mx = sx / kDraws, my = sy / kDraws;
        CHECK(std::abs(std::sqrt(sxx / kDraws - mx * mx) - 20) < 1.0);
        CHECK(std::abs(std::sqrt(syy / kDraws - my * my) - 20) < 1.0);
        CHECK(std::abs(static_cast<double>(inside) / kDraws - 0.99) < 0.002);
    }
    SUBCASE("a box of half-width 3 sigma catches over 99%") {
        SimPredictorConfig cfg;
        cfg.noise_sigma_frac = 0.02;
        Rng rng(5);
        int hits = 0;
        for (int i = 0; i < 10000; ++i) {
            if (point_in_bbox(simulate_sample({440, 440, 560, 560}, frame, cfg, 1.0, rng).coord,
                              {440, 440, 560, 560})) {
                ++hits;
            }
        }
        CHECK(hits > 9900);
    }
    SUBCASE("temperature scales the spread") {
        SimPredictorConfig cfg;
        Rng rng(4);
        double sxx = 0;
        for (int i = 0; i < kDraws; ++i) {
            const auto c = simulate_sample(gt, frame, cfg, 0.5, rng).coord;
            sxx += (c.x - 500) * (c.x - 500);
        }
        CHECK(std::abs(std::sqrt(sxx / kDraws) - 10) < 0.5);
    }
}

TEST_CASE("SimPredictorConfig validation") {
    SimPredictorConfig cfg;
    cfg.outlier_rate = 1.0;
    CHECK_THROWS_AS(validate(cfg), InvalidConfig);
    cfg.outlier_rate = 0.6;
    cfg.distractor_rate = 0.5;
    CHECK_THROWS_AS(validate(cfg), InvalidConfig);
    cfg = {};
    cfg.noise_sigma_frac = -1;
    CHECK_THROWS_AS(validate(cfg), InvalidConfig);
}
