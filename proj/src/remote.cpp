#include "grounder/remote.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>
#include <vector>

#include "grounder/errors.hpp"
#include "httplib.h"

#if defined(GROUNDER_HAVE_OPENCV)
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

namespace grounder {

namespace {

constexpr std::string_view kPlaceholder = "{instruction}";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PredictorUnavailable("cannot read image '" + path + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string crop_encoded(const std::string& encoded, const RoI& roi) {
#if defined(GROUNDER_HAVE_OPENCV)
    const cv::Mat buf(1, static_cast<int>(encoded.size()), CV_8UC1,
                      const_cast<char*>(encoded.data()));
    const cv::Mat img = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
    if (img.empty()) {
        throw PredictorUnavailable("image payload could not be decoded for cropping");
    }
    const int x = std::clamp(static_cast<int>(roi.origin.x), 0, img.cols - 1);
    const int y = std::clamp(static_cast<int>(roi.origin.y), 0, img.rows - 1);
    const int w = std::min(static_cast<int>(roi.dims.width), img.cols - x);
    const int h = std::min(static_cast<int>(roi.dims.height), img.rows - y);
    std::vector<uchar> out;
    if (!cv::imencode(".png", img(cv::Rect(x, y, w, h)), out)) {
        throw PredictorUnavailable("cropped region could not be encoded");
    }
    return {out.begin(), out.end()};
#else
    (void)encoded;
    (void)roi;
    throw PredictorUnavailable("crop queries need a build with OpenCV image codecs");
#endif
}

}  // namespace

ImageDims probe_image_dims(const std::string& path) {
#if defined(GROUNDER_HAVE_OPENCV)
    const std::string bytes = read_file(path);
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<char*>(bytes.data()));
    const cv::Mat img = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
    if (img.empty()) {
        throw Unreadable("cannot decode image '" + path + "'");
    }
    return {img.cols, img.rows};
#else
    (void)path;
    throw Unreadable("reading image sizes needs a build with OpenCV image codecs");
#endif
}

void validate(const RemotePredictorConfig& cfg) {
    split_endpoint(cfg.endpoint_url);
    if (cfg.prompt_template.find(kPlaceholder) == std::string::npos) {
        throw InvalidConfig("prompt template must contain {instruction}");
    }
    if (cfg.max_retries < 0) {
        throw InvalidConfig("max_retries must be non-negative");
    }
    if (cfg.max_in_flight < 1) {
        throw InvalidConfig("max_in_flight must be at least 1");
    }
    if (cfg.request_timeout.count() <= 0) {
        throw InvalidConfig("request timeout must be positive");
    }
}

EndpointParts split_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/\s:]+(:[0-9]{1,5})?)(/[^\s]*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) {
        throw InvalidConfig("endpoint must be an http(s) URL, got '" + url + "'");
    }
    return {m[1].str(), m[3].matched ? m[3].str() : std::string("/")};
}

std::string render_prompt(const std::string& prompt_template, const std::string& instruction) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto hit = prompt_template.find(kPlaceholder, pos);
        if (hit == std::string::npos) {
            out.append(prompt_template, pos, std::string::npos);
            return out;
        }
        out.append(prompt_template, pos, hit - pos);
        out += instruction;
        pos = hit + kPlaceholder.size();
    }
}

std::string load_query_image(const GroundingQuery& query) {
    std::string bytes = query.image_bytes ? *query.image_bytes : read_file(query.image);
    if (query.region) {
        return crop_encoded(bytes, *query.region);
    }
    return bytes;
}

nlohmann::json build_request_body(const GroundingQuery& query, double temperature,
                                  const RemotePredictorConfig& cfg,
                                  const std::string& image_bytes) {
    nlohmann::json text_part = {{"type", "text"},
                                {"text", render_prompt(cfg.prompt_template, query.instruction)}};
    nlohmann::json image_part = {{"type", "image"},
                                 {"data", httplib::detail::base64_encode(image_bytes)}};
    return {{"model", cfg.model_name},
            {"messages", nlohmann::json::array({{{"role", "user"},
                                                 {"content", {text_part, image_part}}}})},
            {"temperature", temperature},
            {"n", 1}};
}

std::string extract_completion(const nlohmann::json& response,
                               const std::optional<std::string>& pointer) {
    try {
        if (pointer) {
            const auto& node = response.at(nlohmann::json::json_pointer(*pointer));
            if (node.is_string()) return node.get<std::string>();
            throw PredictorUnavailable("response pointer " + *pointer + " is not a string");
        }
        const auto& content = response.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        if (content.is_array()) {
            for (const auto& part : content) {
                if (part.is_object() && part.contains("text") && part["text"].is_string()) {
                    return part["text"].get<std::string>();
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw PredictorUnavailable(std::string("malformed completion response: ") + e.what());
    }
    throw PredictorUnavailable("completion response has no text content");
}

std::string remote_request(const GroundingQuery& query, double temperature,
                           const RemotePredictorConfig& cfg) {
    const auto endpoint = split_endpoint(cfg.endpoint_url);
    const std::string body = build_request_body(query, temperature, cfg, load_query_image(query)).dump();

    httplib::Headers headers;
    std::optional<std::string> key = cfg.api_key;
    if (!key) {
        if (const char* env = std::getenv("GROUNDER_API_KEY"); env != nullptr && *env != '\0') {
            key = env;
        }
    }
    if (key) {
        headers.emplace("Authorization", "Bearer " + *key);
    }

    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.request_timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(cfg.request_timeout - secs);

    std::string last_error = "no attempt made";
    bool last_timed_out = false;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        httplib::Client client(endpoint.base);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        const auto started = std::chrono::steady_clock::now();
        const auto res = client.Post(endpoint.path, headers, body, "application/json");
        const auto elapsed = std::chrono::steady_clock::now() - started;

        if (!res) {
            last_timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                             (res.error() == httplib::Error::Read && elapsed >= cfg.request_timeout);
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        last_timed_out = false;
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            last_error = "response body is not JSON";
            continue;
        }
        return extract_completion(parsed, cfg.response_pointer);
    }

    const std::string msg = cfg.endpoint_url + " failed after " +
                            std::to_string(cfg.max_retries + 1) + " attempt(s): " + last_error;
    if (last_timed_out) {
        throw Timeout(msg);
    }
    throw PredictorUnavailable(msg);
}

RemotePredictor::RemotePredictor(RemotePredictorConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
}

std::vector<SampleSlot> RemotePredictor::sample(const GroundingQuery& query, int n,
                                                double temperature) {
    std::vector<std::string> raws(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    const auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                raws[static_cast<std::size_t>(i)] = remote_request(query, temperature, cfg_);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next = n;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int workers = std::min(n, cfg_.max_in_flight);
        for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<SampleSlot> slots;
    slots.reserve(raws.size());
    for (auto& raw : raws) {
        SampleSlot slot{raw, std::nullopt};
        if (auto parsed = parse_model_output(raw)) {
            slot.sample = PredictionSample{std::move(parsed->reasoning), parsed->coord, raw};
        }
        slots.push_back(std::move(slot));
    }
    return slots;
}

}  // namespace grounder
