// Remote predictor against a loopback server.

#include <atomic>
#include <thread>

#include "doctest.h"
#include "grounder/errors.hpp"
#include "grounder/remote.hpp"
#include "httplib.h"

#if defined(GROUNDER_TEST_OPENCV)
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

using namespace grounder;

namespace {

class MockServer {
public:
    httplib::Server server;
    int port = 0;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~MockServer() {
        server.stop();
        if (thread_.joinable()) thread_.join();
    }
    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }

private:
    std::thread thread_;
};

std::string chat_reply(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

GroundingQuery inline_query() {
    GroundingQuery q;
    q.id = "q";
    q.instruction = "close";
    q.image_bytes = std::string("not-really-a-png");
    q.dims = {100, 100};
    return q;
}

RemotePredictorConfig config_for(const MockServer& m) {
    RemotePredictorConfig cfg;
    cfg.endpoint_url = m.url("/v1/chat");
    cfg.model_name = "mock";
    cfg.request_timeout = std::chrono::milliseconds(2000);
    cfg.api_key = "";
    return cfg;
}

}  // namespace

TEST_CASE("loopback completion") {
    MockServer m;
    m.server.Post("/v1/chat", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(chat_reply("(1,2)"), "application/json");
    });
    m.start();
    CHECK(remote_request(inline_query(), 1.0, config_for(m)) == "(1,2)");

    RemotePredictor p(config_for(m));
    const auto slots = p.sample(inline_query(), 5, 1.0);
    REQUIRE(slots.size() == 5);
    for (const auto& s : slots) {
        CHECK(s.raw == "(1,2)");
        REQUIRE(s.ok());
        CHECK(s.sample->coord == PixelCoord{1, 2});
    }
}

TEST_CASE("retries are exhausted on persistent server errors") {
    MockServer m;
    std::atomic<int> calls{0};
    m.server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });
    m.start();
    auto cfg = config_for(m);
    cfg.max_retries = 2;
    CHECK_THROWS_AS(remote_request(inline_query(), 1.0, cfg), PredictorUnavailable);
    CHECK(calls.load() == 3);
}

TEST_CASE("a transient failure is retried") {
    MockServer m;
    std::atomic<int> calls{0};
    m.server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
        if (calls++ == 0) {
            res.status = 503;
            return;
        }
        res.set_content(chat_reply("<think>x</think>(3,4)"), "application/json");
    });
    m.start();
    CHECK(remote_request(inline_query(), 1.0, config_for(m)) == "<think>x</think>(3,4)");
}

TEST_CASE("request body, template and auth header") {
    MockServer m;
    std::string body;
    std::string auth;
    m.server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
        body = req.body;
        auth = req.get_header_value("Authorization");
        res.set_content(chat_reply("(0,0)"), "application/json");
    });
    m.start();
    auto cfg = config_for(m);
    cfg.prompt_template = "Find: {instruction}";
    cfg.api_key = "sekret";
    (void)remote_request(inline_query(), 0.7, cfg);
    CHECK(body.find("Find: close") != std::string::npos);
    CHECK(auth == "Bearer sekret");

    const auto j = nlohmann::json::parse(body);
    CHECK(j["model"] == "mock");
    CHECK(j["temperature"] == doctest::Approx(0.7));
    CHECK(j["messages"][0]["content"][1]["data"] ==
          httplib::detail::base64_encode("not-really-a-png"));
}

TEST_CASE("JSON pointer responses and content parts") {
    MockServer m;
    m.server.Post("/v1/chat", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"j({"output": [{"text": "(9, 8)"}]})j", "application/json");
    });
    m.start();
    auto cfg = config_for(m);
    cfg.response_pointer = "/output/0/text";
    CHECK(remote_request(inline_query(), 1.0, cfg) == "(9, 8)");

    const auto parts = nlohmann::json::parse(
        R"j({"choices":[{"message":{"content":[{"type":"image"},{"type":"text","text":"(5,6)"}]}}]})j");
    CHECK(extract_completion(parts, std::nullopt) == "(5,6)");
    CHECK_THROWS_AS(extract_completion(nlohmann::json::object(), std::nullopt), PredictorUnavailable);
}

TEST_CASE("unreachable endpoint") {
    RemotePredictorConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:1/v1/chat";
    cfg.model_name = "none";
    cfg.max_retries = 0;
    cfg.request_timeout = std::chrono::milliseconds(500);
    CHECK_THROWS_AS(remote_request(inline_query(), 1.0, cfg), PredictorUnavailable);
}

TEST_CASE("endpoint and template helpers") {
    const auto e = split_endpoint("https://api.example.com:8443/v1/chat/completions");
    CHECK(e.base == "https://api.example.com:8443");
    CHECK(e.path == "/v1/chat/completions");
    CHECK(split_endpoint("http://h").path == "/");
    CHECK_THROWS_AS(split_endpoint("ftp://h/x"), InvalidConfig);
    CHECK_THROWS_AS(split_endpoint("not a url"), InvalidConfig);
    CHECK(render_prompt("{instruction} / {instruction}", "a") == "a / a");

    RemotePredictorConfig cfg;
    CHECK_THROWS_AS(validate(cfg), InvalidConfig);
}

#if defined(GROUNDER_TEST_OPENCV)
TEST_CASE("region queries send the cropped image") {
    cv::Mat img(30, 40, CV_8UC3, cv::Scalar(0, 0, 0));
    img(cv::Rect(10, 5, 8, 6)).setTo(cv::Scalar(255, 255, 255));
    std::vector<uchar> png;
    cv::imencode(".png", img, png);

    GroundingQuery q = inline_query();
    q.image_bytes = std::string(png.begin(), png.end());
    q.dims = {40, 30};
    q.region = RoI{{10, 5}, {8, 6}};
    const auto bytes = load_query_image(q);
    const cv::Mat crop = cv::imdecode(std::vector<uchar>(bytes.begin(), bytes.end()), cv::IMREAD_COLOR);
    REQUIRE(crop.cols == 8);
    REQUIRE(crop.rows == 6);
    CHECK(cv::countNonZero(crop.reshape(1) == 255) == 8 * 6 * 3);
}
#endif
