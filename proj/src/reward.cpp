#include "grounder/reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "grounder/errors.hpp"

namespace grounder {

Rollout Rollout::from_raw(std::string query_id, std::string raw, const BBox& gt) {
    Rollout r{std::move(query_id), std::move(raw), std::nullopt, gt};
    if (auto parsed = parse_model_output(r.raw)) {
        r.sample = PredictionSample{std::move(parsed->reasoning), parsed->coord, r.raw};
    }
    return r;
}

bool format_check(std::string_view raw) {
    const auto tags = scan_think_tags(raw);
    if (!tags.balanced || tags.top_level_spans != 1 || !tags.first) {
        return false;
    }
    const auto& span = *tags.first;
    for (std::size_t i = 0; i < span.open; ++i) {
        const char c = raw[i];
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
    }
    const auto parsed = parse_model_output(raw);
    return parsed.has_value() && !parsed->reasoning.empty();
}

double grounding_reward(const Rollout& rollout, const RewardConfig& cfg) {
    const double hit = rollout.hit() ? 1.0 : 0.0;
    const double fmt = format_check(rollout.raw) ? 1.0 : 0.0;
    return hit + cfg.lambda * fmt;
}

GroupScores group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2) {
        throw GroupTooSmall();
    }
    const auto n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double ss = 0.0;
    for (const double r : rewards) ss += (r - mean) * (r - mean);
    const double stddev = std::sqrt(ss / n);

    GroupScores out{rewards, std::vector<double>(rewards.size(), 0.0)};
    if (stddev == 0.0) {
        return out;
    }
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        out.advantages[i] = (rewards[i] - mean) / (stddev + kAdvantageEpsilon);
    }
    return out;
}

std::vector<Rollout> filter_correct_rollouts(const std::vector<Rollout>& rollouts) {
    std::vector<Rollout> out;
    for (const auto& r : rollouts) {
        if (r.hit()) out.push_back(r);
    }
    return out;
}

std::vector<ScoredRollout> score_rollouts(const std::vector<Rollout>& rollouts,
                                          const RewardConfig& cfg) {
    if (!(cfg.lambda >= 0.0)) {
        throw InvalidConfig("lambda must be non-negative");
    }
    std::vector<ScoredRollout> out;
    out.reserve(rollouts.size());
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        out.push_back({rollouts[i], format_check(rollouts[i].raw),
                       grounding_reward(rollouts[i], cfg), std::nullopt});
        groups[rollouts[i].query_id].push_back(i);
    }
    for (const auto& [id, members] : groups) {
        if (members.size() < 2) continue;
        std::vector<double> rewards;
        rewards.reserve(members.size());
        for (const auto i : members) rewards.push_back(out[i].reward);
        const auto scores = group_advantages(rewards);
        for (std::size_t k = 0; k < members.size(); ++k) {
            out[members[k]].advantage = scores.advantages[k];
        }
    }
    return out;
}

nlohmann::json to_json(const ScoredRollout& s) {
    nlohmann::json j;
    j["query_id"] = s.rollout.query_id;
    j["raw"] = s.rollout.raw;
    if (s.rollout.sample) {
        j["coord"] = {s.rollout.sample->coord.x, s.rollout.sample->coord.y};
    } else {
        j["coord"] = nullptr;
    }
    j["in_gt"] = s.rollout.hit();
    j["format_ok"] = s.format_ok;
    j["reward"] = s.reward;
    j["advantage"] = s.advantage ? nlohmann::json(*s.advantage) : nlohmann::json(nullptr);
    return j;
}

Rollout rollout_from_json(const nlohmann::json& j, const std::optional<BBox>& fallback_gt) {
    if (!j.is_object()) throw std::invalid_argument("rollout is not a JSON object");
    const auto id = j.find("query_id");
    const auto raw = j.find("raw");
    if (id == j.end() || !id->is_string()) throw std::invalid_argument("'query_id' must be a string");
    if (raw == j.end() || !raw->is_string()) throw std::invalid_argument("'raw' must be a string");

    std::optional<BBox> gt = fallback_gt;
    for (const char* key : {"bbox", "gt"}) {
        const auto it = j.find(key);
        if (it == j.end()) continue;
        if (!it->is_array() || it->size() != 4 ||
            !std::all_of(it->begin(), it->end(), [](const auto& v) { return v.is_number(); })) {
            throw std::invalid_argument(std::string("'") + key + "' must be four numbers");
        }
        gt = BBox{(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(),
                  (*it)[3].get<double>()};
        break;
    }
    if (!gt) throw std::invalid_argument("rollout has no box and none is known for its query");
    if (!is_valid(*gt)) throw std::invalid_argument("box must satisfy x0 <= x1 and y0 <= y1");
    return Rollout::from_raw(id->get<std::string>(), raw->get<std::string>(), *gt);
}

nlohmann::json to_json(const Rollout& r) {
    return {{"query_id", r.query_id}, {"raw", r.raw}, {"bbox", {r.gt.x0, r.gt.y0, r.gt.x1, r.gt.y1}}};
}

}  // namespace grounder
