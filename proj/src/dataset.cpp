#include "grounder/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "grounder/errors.hpp"

namespace grounder {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view to_string(Device d) noexcept {
    switch (d) {
        case Device::Mobile:
            return "mobile";
        case Device::Desktop:
            return "desktop";
        case Device::Web:
            break;
    }
    return "web";
}

std::string_view to_string(ElementKind e) noexcept {
    return e == ElementKind::Icon ? "icon" : "text";
}

std::optional<Device> parse_device(std::string_view s) noexcept {
    const auto v = lower(s);
    if (v == "mobile") return Device::Mobile;
    if (v == "desktop") return Device::Desktop;
    if (v == "web") return Device::Web;
    return std::nullopt;
}

std::optional<ElementKind> parse_element(std::string_view s) noexcept {
    const auto v = lower(s);
    if (v == "text") return ElementKind::Text;
    if (v == "icon") return ElementKind::Icon;
    return std::nullopt;
}

GroundingQuery EvalRecord::query() const {
    GroundingQuery q;
    q.id = id;
    q.instruction = instruction;
    q.image = image;
    q.dims = dims;
    return q;
}

std::string validate_record(const EvalRecord& r) {
    if (r.id.empty()) return "id must be a non-empty string";
    if (!is_valid(r.dims)) return "width and height must be positive";
    if (!is_valid(r.gt)) return "bbox must satisfy x0 <= x1 and y0 <= y1";
    if (!bbox_within(r.gt, r.dims)) return "bbox lies outside the image";
    return {};
}

nlohmann::json to_json(const EvalRecord& r) {
    nlohmann::json j;
    j["id"] = r.id;
    j["image"] = r.image;
    j["width"] = r.dims.width;
    j["height"] = r.dims.height;
    j["instruction"] = r.instruction;
    j["bbox"] = {r.gt.x0, r.gt.y0, r.gt.x1, r.gt.y1};
    if (r.device) j["device"] = to_string(*r.device);
    if (r.element) j["element"] = to_string(*r.element);
    return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
    const auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
        return j.at(key);
    };
    const auto& id = need("id");
    const auto& image = need("image");
    const auto& width = need("width");
    const auto& height = need("height");
    const auto& instruction = need("instruction");
    const auto& bbox = need("bbox");
    if (!id.is_string()) throw std::invalid_argument("'id' must be a string");
    if (!image.is_string()) throw std::invalid_argument("'image' must be a string");
    if (!instruction.is_string()) throw std::invalid_argument("'instruction' must be a string");
    if (!width.is_number_integer() || !height.is_number_integer()) {
        throw std::invalid_argument("'width' and 'height' must be integers");
    }
    if (!bbox.is_array() || bbox.size() != 4 ||
        !std::all_of(bbox.begin(), bbox.end(), [](const auto& v) { return v.is_number(); })) {
        throw std::invalid_argument("'bbox' must be an array of four numbers");
    }

    EvalRecord r;
    r.id = id.get<std::string>();
    r.image = image.get<std::string>();
    r.dims = {width.get<std::int64_t>(), height.get<std::int64_t>()};
    r.instruction = instruction.get<std::string>();
    r.gt = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
            bbox[3].get<double>()};
    if (j.contains("device") && !j["device"].is_null()) {
        if (!j["device"].is_string()) throw std::invalid_argument("'device' must be a string");
        r.device = parse_device(j["device"].get<std::string>());
        if (!r.device) throw std::invalid_argument("unknown device '" + j["device"].get<std::string>() + "'");
    }
    if (j.contains("element") && !j["element"].is_null()) {
        if (!j["element"].is_string()) throw std::invalid_argument("'element' must be a string");
        r.element = parse_element(j["element"].get<std::string>());
        if (!r.element) throw std::invalid_argument("unknown element '" + j["element"].get<std::string>() + "'");
    }
    if (auto why = validate_record(r); !why.empty()) {
        throw std::invalid_argument(why);
    }
    return r;
}

LoadResult load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Unreadable("cannot open dataset '" + path.string() + "'");
    }
    LoadResult out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            out.errors.push_back({lineno, "invalid JSON"});
            continue;
        }
        try {
            auto rec = record_from_json(j);
            if (!seen.insert(rec.id).second) {
                out.errors.push_back({lineno, "duplicate id '" + rec.id + "'"});
                continue;
            }
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            out.errors.push_back({lineno, e.what()});
        }
    }
    if (in.bad()) {
        throw Unreadable("read error on '" + path.string() + "'");
    }
    if (out.records.empty()) {
        throw EmptyDataset("dataset '" + path.string() + "' has no valid records (" +
                           std::to_string(out.errors.size()) + " rejected)");
    }
    return out;
}

std::string to_jsonl_line(const nlohmann::json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void save_dataset(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Unreadable("cannot write dataset '" + path.string() + "'");
    }
    for (const auto& r : records) {
        out << to_jsonl_line(to_json(r)) << '\n';
    }
    if (!out) {
        throw Unreadable("write error on '" + path.string() + "'");
    }
}

}  // namespace grounder
