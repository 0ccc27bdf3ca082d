#pragma once

// Benchmark records and their JSONL form:
//   {"id", "image", "width", "height", "instruction",
//    "bbox": [x0, y0, x1, y1], "device"?: mobile|desktop|web, "element"?: text|icon}

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grounder/geometry.hpp"
#include "grounder/predictor.hpp"
#include "json.hpp"

namespace grounder {

enum class Device { Mobile, Desktop, Web };
enum class ElementKind { Text, Icon };

std::string_view to_string(Device d) noexcept;
std::string_view to_string(ElementKind e) noexcept;
std::optional<Device> parse_device(std::string_view s) noexcept;
std::optional<ElementKind> parse_element(std::string_view s) noexcept;

struct EvalRecord {
    std::string id;
    std::string image;
    ImageDims dims;
    std::string instruction;
    BBox gt;
    std::optional<Device> device;
    std::optional<ElementKind> element;

    GroundingQuery query() const;
};

/// Empty string when the record satisfies every invariant, else the reason.
std::string validate_record(const EvalRecord& r);

nlohmann::json to_json(const EvalRecord& r);

/// Throws std::invalid_argument with a reason on schema or invariant errors.
EvalRecord record_from_json(const nlohmann::json& j);

struct LineError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct LoadResult {
    std::vector<EvalRecord> records;
    std::vector<LineError> errors;
};

/// Keeps valid lines, reports the rest. Blank lines are ignored; duplicate ids
/// are rejected. Throws Unreadable / EmptyDataset.
LoadResult load_dataset(const std::filesystem::path& path);

void save_dataset(const std::filesystem::path& path, const std::vector<EvalRecord>& records);

/// Serializes one JSON value per line, replacing invalid UTF-8.
std::string to_jsonl_line(const nlohmann::json& j);

}  // namespace grounder
