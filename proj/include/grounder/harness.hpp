#pragma once

// Benchmark evaluation: accuracy with per-domain breakdowns, synthetic
// corpora, tall-screenshot tiling and one-axis ablation sweeps.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grounder/dataset.hpp"
#include "grounder/search.hpp"
#include "json.hpp"

namespace grounder {

enum class SearchMode { TwoStage, SingleStage };

std::string_view to_string(SearchMode m) noexcept;

struct EvalOptions {
    SearchMode mode = SearchMode::TwoStage;
    SearchConfig search;
    std::uint64_t seed = 0;  // echoed in the report
    int jobs = 1;
};

struct RecordOutcome {
    std::string id;
    bool hit = false;
    std::optional<PixelCoord> final_coord;
    std::string reason;  // why a record failed outright; empty otherwise
    std::string domain;
};

struct DomainStats {
    std::size_t hits = 0;
    std::size_t total = 0;
    double accuracy() const noexcept {
        return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
};

struct EvalReport {
    std::size_t hits = 0;
    std::size_t total = 0;
    std::map<std::string, DomainStats> per_domain;  // "device/element"
    std::vector<RecordOutcome> records;
    nlohmann::json config;

    double overall_accuracy() const noexcept {
        return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
};

/// "mobile/text", "web/icon", ...; a missing label reads "unlabeled".
std::string domain_key(const EvalRecord& r);

nlohmann::json config_echo(const EvalOptions& opts, const std::string& predictor_name);

/// Runs the configured search on every record. Failures become misses with a
/// reason. Records are processed by up to `jobs` workers (capped by the
/// predictor's concurrency); results are merged in record order.
EvalReport evaluate(const std::vector<EvalRecord>& records, const EvalOptions& opts,
                    Predictor& predictor);

nlohmann::json to_json(const EvalReport& report);

/// Device x element accuracy table for humans.
std::string format_table(const EvalReport& report);

// ---------------------------------------------------------------------------

struct TilingConfig {
    std::int64_t block_height = 1;
    std::int64_t overlap = 0;
};

/// Default for an image: square blocks of the image width, 10% overlap.
TilingConfig default_tiling(const ImageDims& dims);

/// Full-width blocks starting every (block_height - overlap) pixels; the last
/// block is anchored to the bottom edge. Throws InvalidConfig.
std::vector<RoI> tile_tall_image(const ImageDims& dims, const TilingConfig& cfg);

// ---------------------------------------------------------------------------

struct SynthBenchConfig {
    std::size_t n_records = 500;
    std::uint64_t rng_seed = 42;
    std::vector<ImageDims> image_sizes{{1920, 1080}, {2560, 1440}, {3840, 2160}};
    std::pair<std::int64_t, std::int64_t> text_width{40, 200};
    std::pair<std::int64_t, std::int64_t> text_height{16, 40};
    std::pair<std::int64_t, std::int64_t> icon_side{16, 64};
};

void validate(const SynthBenchConfig& cfg);

/// Seeded corpus. Devices and element kinds cycle round-robin over all six
/// combinations; mobile screens are portrait. Boxes sit uniformly inside.
std::vector<EvalRecord> gen_synth_benchmark(const SynthBenchConfig& cfg);

// ---------------------------------------------------------------------------

enum class AblationAxis { N, Temperature, RoiSize, Strategy };

std::string_view to_string(AblationAxis a) noexcept;
std::optional<AblationAxis> parse_axis(std::string_view s) noexcept;

struct AblationRow {
    std::string value;
    double accuracy = 0.0;
    std::size_t hits = 0;
    std::size_t total = 0;
};

/// `base` with one axis set from its text value. The N axis sets both N and M.
EvalOptions apply_axis(const EvalOptions& base, AblationAxis axis, const std::string& value);

std::vector<AblationRow> ablation_sweep(const std::vector<EvalRecord>& records, AblationAxis axis,
                                        const std::vector<std::string>& values,
                                        const EvalOptions& base, Predictor& predictor);

/// "value,accuracy,hits,total" header plus one row per value.
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace grounder
