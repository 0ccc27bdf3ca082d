#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "grounder/errors.hpp"
#include "grounder/reward.hpp"
#include "grounder/rng.hpp"

using namespace grounder;

namespace {

const BBox kBox{0, 0, 10, 10};

}  // namespace

TEST_CASE("format_check examples") {
    CHECK(format_check("<think>a</think>(1,2)"));
    CHECK_FALSE(format_check("(1,2)"));
    CHECK_FALSE(format_check("<think>a(1,2)"));

    CHECK(format_check("  \n<think> look left </think> (3.5, 4)"));
    CHECK_FALSE(format_check("<think></think>(1,2)"));
    CHECK_FALSE(format_check("<think>   </think>(1,2)"));
    CHECK_FALSE(format_check("hi <think>a</think>(1,2)"));
    CHECK_FALSE(format_check("<think>a</think><think>b</think>(1,2)"));
    CHECK_FALSE(format_check("<think>a</think>(1,2)</think>"));
    CHECK_FALSE(format_check("<think>a</think> no coordinate"));
    CHECK(format_check("<think>a <think>nested</think></think>(1,2)"));
}

TEST_CASE("grounding_reward cases") {
    const RewardConfig cfg;
    CHECK(grounding_reward(Rollout::from_raw("q", "<think>a</think>(5,5)", kBox), cfg) ==
          doctest::Approx(1.1));
    CHECK(grounding_reward(Rollout::from_raw("q", "(5,5)", kBox), cfg) == 1.0);
    CHECK(grounding_reward(Rollout::from_raw("q", "<think>a</think>(50,5)", kBox), cfg) ==
          doctest::Approx(0.1));
    CHECK(grounding_reward(Rollout::from_raw("q", "nothing", kBox), cfg) == 0.0);
    CHECK(grounding_reward(Rollout::from_raw("q", "<think>a</think>(10,10)", kBox), cfg) ==
          doctest::Approx(1.1));
}

TEST_CASE("reward image over fuzzed rollouts") {
    Rng rng(31);
    const RewardConfig cfg;
    const std::vector<std::string> shells = {"<think>r</think>", "", "<think>", "x <think>r</think>",
                                             "<think> </think>", "<think>r</think></think>"};
    std::set<double> seen;
    for (int i = 0; i < 20000; ++i) {
        const auto& shell = shells[static_cast<std::size_t>(rng.uniform_int(0, 5))];
        std::string raw = shell;
        if (!rng.bernoulli(0.1)) {
            raw += "(" + std::to_string(rng.uniform_int(-5, 20)) + ", " +
                   std::to_string(rng.uniform_int(-5, 20)) + ")";
        }
        const double r = grounding_reward(Rollout::from_raw("q", raw, kBox), cfg);
        const bool allowed = r == 0.0 || r == 1.0 || std::abs(r - 0.1) < 1e-15 ||
                             std::abs(r - 1.1) < 1e-15;
        REQUIRE(allowed);
        seen.insert(std::round(r * 10) / 10);
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("format_check implies non-empty reasoning") {
    Rng rng(32);
    const std::string alphabet = "<>/think ()0123456789,a";
    for (int i = 0; i < 20000; ++i) {
        std::string s = i % 3 == 0 ? "<think>" : "";
        const auto len = rng.uniform_int(0, 30);
        for (int k = 0; k < len; ++k) {
            s += alphabet[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1))];
        }
        if (format_check(s)) {
            const auto p = parse_model_output(s);
            REQUIRE(p);
            REQUIRE_FALSE(p->reasoning.empty());
        }
    }
}

TEST_CASE("group_advantages") {
    // Population std: [1.1, 0.1] has mean 0.6 and std 0.5.
    const auto a = group_advantages({1.1, 0.1});
    CHECK(a.advantages[0] == doctest::Approx(0.5 / (0.5 + kAdvantageEpsilon)).epsilon(1e-12));
    CHECK(a.advantages[1] == doctest::Approx(-0.5 / (0.5 + kAdvantageEpsilon)).epsilon(1e-12));

    for (const double adv : group_advantages({1.0, 1.0, 1.0}).advantages) CHECK(adv == 0.0);

    const auto c = group_advantages({0, 1});
    CHECK(c.advantages[0] + c.advantages[1] == doctest::Approx(0.0));

    CHECK_THROWS_AS(group_advantages({1.0}), GroupTooSmall);
    CHECK_THROWS_AS(group_advantages({}), GroupTooSmall);
}

TEST_CASE("group_advantages is centered, scaled and shift invariant") {
    Rng rng(33);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> r;
        const auto n = rng.uniform_int(2, 16);
        for (int i = 0; i < n; ++i) r.push_back(std::vector<double>{0, 0.1, 1, 1.1}[static_cast<std::size_t>(rng.uniform_int(0, 3))]);
        const auto g = group_advantages(r);
        CHECK(g.rewards == r);
        const double sum = std::accumulate(g.advantages.begin(), g.advantages.end(), 0.0);
        CHECK(std::abs(sum) < 1e-9);

        const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
        double var = 0;
        for (const double x : r) var += (x - mean) * (x - mean);
        var /= static_cast<double>(n);
        if (var > 1e-12) {
            double sq = 0;
            for (const double x : g.advantages) sq += x * x;
            CHECK(std::sqrt(sq / static_cast<double>(n)) == doctest::Approx(1.0).epsilon(1e-6));
        }

        auto shifted = r;
        for (auto& x : shifted) x += 3.0;
        const auto h = group_advantages(shifted);
        for (std::size_t i = 0; i < r.size(); ++i) {
            CHECK(h.advantages[i] == doctest::Approx(g.advantages[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("filter_correct_rollouts") {
    const std::vector<Rollout> mixed = {
        Rollout::from_raw("a", "(1,1)", kBox), Rollout::from_raw("b", "(20,1)", kBox),
        Rollout::from_raw("c", "<think>x</think>(9,9)", kBox), Rollout::from_raw("d", "junk", kBox)};
    const auto hits = filter_correct_rollouts(mixed);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].query_id == "a");
    CHECK(hits[1].query_id == "c");
    CHECK(filter_correct_rollouts({}).empty());
    CHECK(filter_correct_rollouts({mixed[1], mixed[3]}).empty());

    // Idempotent and order preserving on random batches.
    Rng rng(34);
    std::vector<Rollout> batch;
    for (int i = 0; i < 200; ++i) {
        batch.push_back(Rollout::from_raw(std::to_string(i),
                                          "(" + std::to_string(rng.uniform_int(0, 20)) + ",5)", kBox));
    }
    const auto once = filter_correct_rollouts(batch);
    const auto twice = filter_correct_rollouts(once);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].query_id == twice[i].query_id);
    for (std::size_t i = 1; i < once.size(); ++i) CHECK(std::stoi(once[i - 1].query_id) < std::stoi(once[i].query_id));
}

TEST_CASE("score_rollouts groups by query id") {
    const std::vector<Rollout> batch = {
        Rollout::from_raw("a", "<think>x</think>(1,1)", kBox), Rollout::from_raw("b", "(1,1)", kBox),
        Rollout::from_raw("a", "<think>x</think>(50,1)", kBox)};
    const auto scored = score_rollouts(batch, RewardConfig{});
    REQUIRE(scored.size() == 3);
    CHECK(scored[0].format_ok);
    CHECK(scored[0].reward == doctest::Approx(1.1));
    REQUIRE(scored[0].advantage);
    CHECK(*scored[0].advantage > 0);
    CHECK(*scored[2].advantage < 0);
    CHECK_FALSE(scored[1].advantage.has_value());

    const auto j = to_json(scored[1]);
    CHECK(j["query_id"] == "b");
    CHECK(j["in_gt"] == true);
    CHECK(j["format_ok"] == false);
    CHECK(j["advantage"].is_null());
    CHECK(j["coord"][0] == 1.0);
    CHECK(to_json(score_rollouts({Rollout::from_raw("z", "??", kBox)}, {})[0])["coord"].is_null());
}

TEST_CASE("rollout JSON") {
    const auto r = rollout_from_json(nlohmann::json::parse(R"j({"query_id":"a","raw":"(1,2)","bbox":[0,0,5,5]})j"));
    CHECK(r.hit());
    CHECK(to_json(r)["bbox"][2] == 5.0);
    CHECK(rollout_from_json(to_json(r)).raw == "(1,2)");

    const auto g = rollout_from_json(nlohmann::json::parse(R"j({"query_id":"a","raw":"(9,9)"})j"), BBox{8, 8, 10, 10});
    CHECK(g.hit());
    CHECK_THROWS_AS(rollout_from_json(nlohmann::json::parse(R"j({"query_id":"a","raw":"x"})j")), std::invalid_argument);
    CHECK_THROWS_AS(rollout_from_json(nlohmann::json::parse(R"j({"query_id":1,"raw":"x","bbox":[0,0,1,1]})j")), std::invalid_argument);
    CHECK_THROWS_AS(rollout_from_json(nlohmann::json::parse(R"j({"query_id":"a","raw":"x","bbox":[3,0,1,1]})j")), std::invalid_argument);
}
