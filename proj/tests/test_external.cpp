#include <atomic>
#include <thread>

#include "doctest.h"

#include "httplib.h"

#include <nlohmann/json.hpp>

#include "gvqa/error.hpp"
#include "gvqa/vqa.hpp"

using namespace gvqa;

namespace {

// In-process answer service stub bound to an ephemeral port.
class StubServer {
public:
    explicit StubServer(const std::string& body, int status = 200) {
        server_.Post("/answer", [body, status](const httplib::Request&, httplib::Response& res) {
            res.status = status;
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] int port() const { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_{0};
};

ExternalEndpoint endpoint_for(const StubServer& server) {
    ExternalEndpoint e;
    e.host = "127.0.0.1";
    e.port = server.port();
    e.path = "/answer";
    e.timeout_ms = 2000;
    return e;
}

} // namespace

TEST_CASE("external answers come back with source=external") {
    StubServer server(R"({"answer":"cup","confidence":0.84})");
    const AnswerResult r = external_answer(endpoint_for(server), "vid0", "where is the cup?");
    CHECK(r.answer == "cup");
    CHECK(r.confidence == doctest::Approx(0.84));
    CHECK(r.source == AnswerSource::External);
}

TEST_CASE("unreachable endpoints raise a connection error") {
    ExternalEndpoint e;
    e.host = "127.0.0.1";
    e.port = 1; // nothing listens here
    e.timeout_ms = 200;
    CHECK_THROWS_AS(external_answer(e, "vid0", "q"), Error);
}

TEST_CASE("responses missing the answer field are malformed") {
    StubServer server(R"({"confidence":0.5})");
    CHECK_THROWS_AS(external_answer(endpoint_for(server), "v", "q"), Error);
}

TEST_CASE("non-2xx statuses are protocol errors") {
    StubServer server(R"({"answer":"cup"})", 500);
    CHECK_THROWS_AS(external_answer(endpoint_for(server), "v", "q"), Error);
}

TEST_CASE("non-JSON bodies are malformed") {
    StubServer server("not json at all");
    CHECK_THROWS_AS(external_answer(endpoint_for(server), "v", "q"), Error);
}
