#pragma once

// HTTP client for a real grounding model behind a chat-completion style
// endpoint. One request per rollout:
//
//   POST <endpoint path>
//   Authorization: Bearer $GROUNDER_API_KEY        (only when set)
//   {"model": <model_name>,
//    "messages": [{"role": "user",
//                  "content": [{"type": "text", "text": <rendered prompt>},
//                              {"type": "image", "data": <base64 image>}]}],
//    "temperature": <T>,
//    "n": 1}
//
// The completion is read from choices[0].message.content (a string, or the
// first part carrying a "text" field), or from `response_pointer` when set.

#include <chrono>
#include <optional>
#include <string>

#include "grounder/predictor.hpp"
#include "json.hpp"

namespace grounder {

struct RemotePredictorConfig {
    std::string endpoint_url;
    std::string model_name;
    std::chrono::milliseconds request_timeout{60'000};
    int max_retries = 2;
    std::string prompt_template = "{instruction}";
    std::optional<std::string> response_pointer;  // JSON pointer, e.g. "/output/0/text"
    int max_in_flight = 8;
    std::optional<std::string> api_key;  // defaults to $GROUNDER_API_KEY
};

void validate(const RemotePredictorConfig& cfg);

/// scheme://host[:port] and path of an endpoint URL.
struct EndpointParts {
    std::string base;
    std::string path;
};

/// Throws InvalidConfig on anything that is not an http(s) URL with a host.
EndpointParts split_endpoint(const std::string& url);

/// Replaces every "{instruction}" in the template.
std::string render_prompt(const std::string& prompt_template, const std::string& instruction);

/// Width and height of an image file. Throws Unreadable.
ImageDims probe_image_dims(const std::string& path);

/// Bytes sent as the image part: the file (or inline payload), cropped to the
/// query region when one is set.
std::string load_query_image(const GroundingQuery& query);

nlohmann::json build_request_body(const GroundingQuery& query, double temperature,
                                  const RemotePredictorConfig& cfg,
                                  const std::string& image_bytes);

/// Pulls the completion text out of a response body. Throws
/// PredictorUnavailable when it has no usable text field.
std::string extract_completion(const nlohmann::json& response,
                               const std::optional<std::string>& pointer);

/// One completion for the query. Transport failures and non-2xx statuses are
/// retried up to max_retries times; then PredictorUnavailable (or Timeout if
/// the last attempt timed out) is thrown.
std::string remote_request(const GroundingQuery& query, double temperature,
                           const RemotePredictorConfig& cfg);

class RemotePredictor final : public Predictor {
public:
    explicit RemotePredictor(RemotePredictorConfig cfg);

    std::vector<SampleSlot> sample(const GroundingQuery& query, int n,
                                   double temperature) override;
    std::string name() const override { return "remote:" + cfg_.model_name; }
    int max_concurrency() const override { return cfg_.max_in_flight; }

private:
    RemotePredictorConfig cfg_;
};

}  // namespace grounder
