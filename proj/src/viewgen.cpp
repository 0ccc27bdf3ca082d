#include "grounder/viewgen.hpp"

#include "grounder/errors.hpp"
#include "grounder/rng.hpp"

namespace grounder {

void validate(const ViewGenConfig& cfg) {
    if (!(cfg.max_area_frac > 0.0 && cfg.max_area_frac <= 1.0)) {
        throw InvalidConfig("max_area_frac must lie in (0, 1]");
    }
    if (cfg.pairs_per_record < 1) {
        throw InvalidConfig("pairs_per_record must be at least 1");
    }
    validate(cfg.kde);
}

std::uint64_t crop_seed(const ViewGenConfig& cfg, std::string_view record_id, int pair_index) {
    return stream_key(cfg.rng_seed, hash_string(record_id), 0xC0FFEEULL,
                      static_cast<std::uint64_t>(pair_index));
}

ViewPair make_view_pair(const EvalRecord& record, const Rollout& rollout,
                        const ViewGenConfig& cfg, std::uint64_t seed) {
    if (!rollout.hit()) {
        throw InvalidConfig("view pairs need a rollout inside the ground-truth box");
    }
    ViewPair pair;
    pair.image = record.image;
    pair.instruction = record.instruction;
    pair.reasoning = rollout.sample->reasoning;
    pair.global_target = center_of_bbox(record.gt);
    pair.local_crop = sample_training_crop(record.gt, record.dims, cfg.max_area_frac, seed);
    pair.local_target = to_local(pair.global_target, pair.local_crop);
    return pair;
}

std::size_t pick_reasoning_source(const std::vector<Rollout>& correct, const ImageDims& frame,
                                  const KdeConfig& kde) {
    if (correct.empty()) {
        throw EmptySampleSet();
    }
    SampleSet set{{}, frame};
    for (const auto& r : correct) set.points.push_back(r.sample->coord);
    std::size_t best = 0;
    double best_density = -1.0;
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        const double d = kde_density_at(set.points[i], set, kde);
        if (d > best_density * (1.0 + 1e-12)) {
            best = i;
            best_density = d;
        }
    }
    return best;
}

nlohmann::json global_example(const ViewPair& pair) {
    return {{"image", pair.image},
            {"instruction", pair.instruction},
            {"reasoning", pair.reasoning},
            {"target", {pair.global_target.x, pair.global_target.y}},
            {"view", "global"},
            {"crop", nullptr}};
}

nlohmann::json local_example(const ViewPair& pair) {
    return {{"image", pair.image},
            {"instruction", pair.instruction},
            {"reasoning", pair.reasoning},
            {"target", {pair.local_target.x, pair.local_target.y}},
            {"view", "local"},
            {"crop",
             {{"x0", pair.local_crop.origin.x},
              {"y0", pair.local_crop.origin.y},
              {"w", pair.local_crop.dims.width},
              {"h", pair.local_crop.dims.height}}}};
}

nlohmann::json to_json(const ViewGenStats& stats) {
    return {{"examples", stats.examples},
            {"pairs", stats.pairs},
            {"skipped_infeasible", stats.skipped_infeasible},
            {"records_without_correct_rollout", stats.records_without_correct_rollout}};
}

ViewGenStats gen_consistency_dataset(const std::vector<EvalRecord>& records,
                                     const std::map<std::string, std::vector<Rollout>>& rollouts,
                                     const ViewGenConfig& cfg, std::ostream& out) {
    validate(cfg);
    ViewGenStats stats;
    const std::vector<Rollout> none;
    for (const auto& record : records) {
        const auto it = rollouts.find(record.id);
        const auto& mine = it == rollouts.end() ? none : it->second;

        // Rollouts are judged against the record's box, whatever they carried.
        std::vector<Rollout> judged;
        judged.reserve(mine.size());
        for (auto r : mine) {
            r.gt = record.gt;
            judged.push_back(std::move(r));
        }
        const auto correct = filter_correct_rollouts(judged);
        if (correct.empty()) {
            ++stats.records_without_correct_rollout;
            continue;
        }
        const auto& source = correct[pick_reasoning_source(correct, record.dims, cfg.kde)];

        for (int p = 0; p < cfg.pairs_per_record; ++p) {
            try {
                const auto pair = make_view_pair(record, source, cfg, crop_seed(cfg, record.id, p));
                out << to_jsonl_line(global_example(pair)) << '\n';
                out << to_jsonl_line(local_example(pair)) << '\n';
                stats.examples += 2;
                ++stats.pairs;
            } catch (const Infeasible&) {
                ViewPair global_only;
                global_only.image = record.image;
                global_only.instruction = record.instruction;
                global_only.reasoning = source.sample->reasoning;
                global_only.global_target = center_of_bbox(record.gt);
                out << to_jsonl_line(global_example(global_only)) << '\n';
                stats.examples += 1;
                ++stats.skipped_infeasible;
            }
        }
        if (!out) {
            throw Unreadable("write error while emitting consistency examples");
        }
    }
    return stats;
}

}  // namespace grounder
