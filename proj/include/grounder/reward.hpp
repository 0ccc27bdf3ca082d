#pragma once

// Rollout scoring for RL fine-tuning: hit indicator plus a weighted format
// bonus, group-relative advantages, and the correct-rollout filter.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grounder/geometry.hpp"
#include "grounder/predictor.hpp"
#include "json.hpp"

namespace grounder {

struct Rollout {
    std::string query_id;
    std::string raw;
    std::optional<PredictionSample> sample;  // empty when `raw` did not parse
    BBox gt;

    /// Parses `raw` into `sample`.
    static Rollout from_raw(std::string query_id, std::string raw, const BBox& gt);

    bool hit() const noexcept { return sample && point_in_bbox(sample->coord, gt); }
};

struct RewardConfig {
    double lambda = 0.1;
};

struct GroupScores {
    std::vector<double> rewards;
    std::vector<double> advantages;
};

inline constexpr double kAdvantageEpsilon = 1e-8;

/// True iff the completion is one whitespace-led, non-empty, well-formed
/// outermost <think>...</think> span followed by a coordinate, with no other
/// think tags at top level and no unbalanced ones anywhere.
bool format_check(std::string_view raw);

/// 1[coord in gt] + lambda * 1[format ok]. Unparsed rollouts miss.
double grounding_reward(const Rollout& rollout, const RewardConfig& cfg);

/// (r_i - mean) / (population std + eps). Throws GroupTooSmall below two.
GroupScores group_advantages(const std::vector<double>& rewards);

/// Rollouts whose coordinate lies in their box, in input order.
std::vector<Rollout> filter_correct_rollouts(const std::vector<Rollout>& rollouts);

struct ScoredRollout {
    Rollout rollout;
    bool format_ok = false;
    double reward = 0.0;
    std::optional<double> advantage;
};

/// Scores a batch; advantages are computed within each query_id group of two
/// or more rollouts and left empty for singleton groups.
std::vector<ScoredRollout> score_rollouts(const std::vector<Rollout>& rollouts,
                                          const RewardConfig& cfg);

/// Reads {query_id, raw, bbox|gt: [x0,y0,x1,y1]}. The box may be omitted when
/// `fallback_gt` supplies it. Throws std::invalid_argument.
Rollout rollout_from_json(const nlohmann::json& j, const std::optional<BBox>& fallback_gt = std::nullopt);

/// {query_id, raw, bbox}
nlohmann::json to_json(const Rollout& r);

/// {query_id, raw, coord:[x,y]|null, in_gt, format_ok, reward, advantage|null}
nlohmann::json to_json(const ScoredRollout& s);

}  // namespace grounder
