#pragma once

// Consistency training data: for every record with a correct rollout, a
// full-image example and a cropped example that share the instruction and
// the rollout's reasoning, with the target remapped into the crop.
//
// Output line schema (JSONL):
//   {"image", "instruction", "reasoning", "target": [x, y],
//    "view": "global"|"local", "crop": {"x0","y0","w","h"}|null}

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "grounder/dataset.hpp"
#include "grounder/density.hpp"
#include "grounder/reward.hpp"

namespace grounder {

struct ViewGenConfig {
    double max_area_frac = 0.3;
    std::uint64_t rng_seed = 0;
    int pairs_per_record = 1;
    KdeConfig kde;  // ranks correct rollouts when several exist
};

void validate(const ViewGenConfig& cfg);

struct ViewPair {
    std::string image;
    std::string instruction;
    std::string reasoning;
    PixelCoord global_target;
    RoI local_crop;
    PixelCoord local_target;
};

/// Seed for the `pair_index`-th crop of a record.
std::uint64_t crop_seed(const ViewGenConfig& cfg, std::string_view record_id, int pair_index);

/// Requires a rollout that hits the record's box. Throws Infeasible when no
/// admissible crop contains the box.
ViewPair make_view_pair(const EvalRecord& record, const Rollout& rollout,
                        const ViewGenConfig& cfg, std::uint64_t seed);

/// Among correct rollouts, the one whose coordinate has the highest KDE
/// density over all correct coordinates; ties to the lowest index.
std::size_t pick_reasoning_source(const std::vector<Rollout>& correct, const ImageDims& frame,
                                  const KdeConfig& kde);

nlohmann::json global_example(const ViewPair& pair);
nlohmann::json local_example(const ViewPair& pair);

struct ViewGenStats {
    std::size_t examples = 0;
    std::size_t pairs = 0;
    std::size_t skipped_infeasible = 0;
    std::size_t records_without_correct_rollout = 0;
};

nlohmann::json to_json(const ViewGenStats& stats);

/// Writes examples for `records` in input order. `rollouts` maps record id to
/// that record's rollouts. Returns counts; `examples` is the number of lines.
ViewGenStats gen_consistency_dataset(const std::vector<EvalRecord>& records,
                                     const std::map<std::string, std::vector<Rollout>>& rollouts,
                                     const ViewGenConfig& cfg, std::ostream& out);

}  // namespace grounder
