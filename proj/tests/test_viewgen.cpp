#include <sstream>

#include "doctest.h"
#include "grounder/errors.hpp"
#include "grounder/viewgen.hpp"
#include "json.hpp"

using namespace grounder;

namespace {

EvalRecord record(std::string id, BBox gt, ImageDims dims = {2000, 1000}) {
    EvalRecord r;
    r.id = std::move(id);
    r.image = "img/" + r.id + ".png";
    r.dims = dims;
    r.instruction = "press ok";
    r.gt = gt;
    return r;
}

Rollout hit_for(const EvalRecord& r, std::string reasoning = "centered below the title") {
    const auto c = center_of_bbox(r.gt);
    return Rollout::from_raw(r.id, render_completion(reasoning, c), r.gt);
}

}  // namespace

TEST_CASE("make_view_pair example") {
    const auto r = record("a", {490, 290, 510, 310});
    const ViewGenConfig cfg;
    const auto pair = make_view_pair(r, hit_for(r), cfg, 11);
    CHECK(pair.global_target == PixelCoord{500, 300});
    const auto b = pair.local_crop.bounds();
    CHECK(b.x0 <= 490);
    CHECK(b.y0 <= 290);
    CHECK(b.x1 >= 510);
    CHECK(b.y1 >= 310);
    CHECK(pair.local_target == PixelCoord{500 - pair.local_crop.origin.x, 300 - pair.local_crop.origin.y});
    CHECK(pair.local_crop.dims.width * pair.local_crop.dims.height <= 600000);
    CHECK(pair.reasoning == "centered below the title");
    CHECK(pair.instruction == r.instruction);

    const auto again = make_view_pair(r, hit_for(r), cfg, 11);
    CHECK(again.local_crop == pair.local_crop);

    const auto miss = Rollout::from_raw("a", "(5,5)", r.gt);
    CHECK_THROWS_AS(make_view_pair(r, miss, cfg, 11), InvalidConfig);
}

TEST_CASE("view pairs are equivariant over many seeds") {
    const auto r = record("b", {100, 700, 260, 760});
    const ViewGenConfig cfg;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const auto p = make_view_pair(r, hit_for(r), cfg, s);
        REQUIRE(p.local_target == to_local(p.global_target, p.local_crop));
        REQUIRE(static_cast<double>(p.local_crop.dims.width * p.local_crop.dims.height) <= 600000.0);
    }
}

TEST_CASE("pick_reasoning_source prefers the consensus coordinate") {
    const BBox gt{0, 0, 400, 400};
    const std::vector<Rollout> correct = {
        Rollout::from_raw("q", render_completion("lonely", {390, 390}), gt),
        Rollout::from_raw("q", render_completion("crowd1", {100, 100}), gt),
        Rollout::from_raw("q", render_completion("crowd2", {104, 102}), gt),
        Rollout::from_raw("q", render_completion("crowd3", {98, 101}), gt)};
    const auto idx = pick_reasoning_source(correct, {1000, 1000}, KdeConfig{});
    CHECK(correct[idx].sample->reasoning.rfind("crowd", 0) == 0);

    const std::vector<Rollout> tied = {correct[0], correct[0]};
    CHECK(pick_reasoning_source(tied, {1000, 1000}, KdeConfig{}) == 0);
}

TEST_CASE("gen_consistency_dataset line counts and schema") {
    std::vector<EvalRecord> records;
    std::map<std::string, std::vector<Rollout>> rollouts;
    for (int i = 0; i < 10; ++i) {
        records.push_back(record("r" + std::to_string(i), {100.0 + 50 * i, 200, 140.0 + 50 * i, 230}));
        rollouts[records.back().id] = {Rollout::from_raw(records.back().id, "(0,0)", records.back().gt),
                                       hit_for(records.back())};
    }
    std::ostringstream out;
    const ViewGenConfig cfg;
    const auto stats = gen_consistency_dataset(records, rollouts, cfg, out);
    CHECK(stats.examples == 20);
    CHECK(stats.pairs == 10);

    std::istringstream in(out.str());
    std::string line;
    std::vector<nlohmann::json> lines;
    while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
    REQUIRE(lines.size() == 20);
    for (std::size_t i = 0; i < lines.size(); i += 2) {
        const auto& g = lines[i];
        const auto& l = lines[i + 1];
        CHECK(g["view"] == "global");
        CHECK(l["view"] == "local");
        CHECK(g["crop"].is_null());
        CHECK(l["crop"].is_object());
        CHECK(g["instruction"] == l["instruction"]);
        CHECK(g["reasoning"] == l["reasoning"]);
        CHECK(g["image"] == l["image"]);
        CHECK(l["target"][0].get<double>() == g["target"][0].get<double>() - l["crop"]["x0"].get<double>());
        CHECK(l["target"][1].get<double>() == g["target"][1].get<double>() - l["crop"]["y0"].get<double>());
    }

    std::ostringstream again;
    gen_consistency_dataset(records, rollouts, cfg, again);
    CHECK(again.str() == out.str());
}

TEST_CASE("records without a correct rollout contribute nothing") {
    const auto r = record("z", {10, 10, 20, 20});
    std::map<std::string, std::vector<Rollout>> rollouts{{"z", {Rollout::from_raw("z", "(500,500)", r.gt)}}};
    std::ostringstream out;
    const auto stats = gen_consistency_dataset({r, record("y", {1, 1, 2, 2})}, rollouts, ViewGenConfig{}, out);
    CHECK(stats.examples == 0);
    CHECK(stats.records_without_correct_rollout == 2);
    CHECK(out.str().empty());
}

TEST_CASE("infeasible crops fall back to the global example") {
    const auto r = record("big", {0, 0, 1900, 950});
    std::map<std::string, std::vector<Rollout>> rollouts{{"big", {hit_for(r)}}};
    std::ostringstream out;
    const auto stats = gen_consistency_dataset({r}, rollouts, ViewGenConfig{}, out);
    CHECK(stats.examples == 1);
    CHECK(stats.skipped_infeasible == 1);
    CHECK(to_json(stats)["skipped_infeasible"] == 1);
}

TEST_CASE("ViewGenConfig validation and pairs per record") {
    ViewGenConfig cfg;
    cfg.max_area_frac = 0;
    CHECK_THROWS_AS(validate(cfg), InvalidConfig);
    cfg = {};
    cfg.pairs_per_record = 0;
    CHECK_THROWS_AS(validate(cfg), InvalidConfig);

    cfg = {};
    cfg.pairs_per_record = 3;
    const auto r = record("p", {300, 300, 340, 320});
    std::ostringstream out;
    CHECK(gen_consistency_dataset({r}, {{"p", {hit_for(r)}}}, cfg, out).examples == 6);
    CHECK(crop_seed(cfg, "p", 0) != crop_seed(cfg, "p", 1));
}
