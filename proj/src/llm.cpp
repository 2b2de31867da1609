#include "csi/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>

#include <httplib.h>

#include "csi/error.hpp"

namespace csi {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string path;
};

std::optional<SplitUrl> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0) return std::nullopt;
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return SplitUrl{url, "/"};
    return SplitUrl{url.substr(0, slash), url.substr(slash)};
}

// Returns the parsed JSON reply or an error description.
std::pair<std::optional<json>, std::string> post_json(const LlmEndpoint& ep, const json& body) {
    const auto parts = split_url(ep.url);
    if (!parts) return {std::nullopt, "unsupported endpoint url '" + ep.url + "'"};
    httplib::Client client(parts->origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);

    auto res = client.Post(parts->path, headers, body.dump(), "application/json");
    if (!res) return {std::nullopt, "request failed: " + httplib::to_string(res.error())};
    if (res->status != 200) return {std::nullopt, "HTTP status " + std::to_string(res->status)};
    try {
        return {json::parse(res->body), {}};
    } catch (const json::parse_error& e) {
        return {std::nullopt, std::string("malformed reply: ") + e.what()};
    }
}

}  // namespace

LlmEndpoint LlmEndpoint::from_env() {
    LlmEndpoint ep;
    if (const char* v = std::getenv("CSI_LLM_URL")) ep.url = v;
    if (const char* v = std::getenv("CSI_LLM_KEY")) ep.api_key = v;
    if (const char* v = std::getenv("CSI_LLM_MODEL")) ep.model = v;
    if (const char* v = std::getenv("CSI_LLM_TIMEOUT_MS")) {
        const long ms = std::strtol(v, nullptr, 10);
        if (ms > 0) ep.timeout = std::chrono::milliseconds(ms);
    }
    return ep;
}

std::string HttpRelayBackend::summarize(const SummaryRequest& request) {
    json transcript = json::array();
    for (const auto& m : request.window) transcript.push_back(json{{"author", m.author}, {"text", m.text}});
    const json body{{"task", "relay_summary"},
                    {"model", endpoint_.model},
                    {"option", request.option},
                    {"insight_text", request.insight_text},
                    {"transcript", std::move(transcript)}};

    auto [reply, err] = post_json(endpoint_, body);
    if (!reply) throw Error(ErrorCode::DistillFailed, err);
    if (!reply->is_object() || !reply->contains("summary_text") || !reply->at("summary_text").is_string())
        throw Error(ErrorCode::DistillFailed, "reply has no summary_text");
    auto summary = reply->at("summary_text").get<std::string>();
    if (summary.empty()) throw Error(ErrorCode::DistillFailed, "empty summary");
    if (mentions_other_option(summary, request.option))
        throw Error(ErrorCode::DistillFailed, "summary introduces another option");
    return truncate_at_word_boundary(summary);
}

std::vector<ConvictionEvent> HttpConvictionEstimator::estimate(const Message& message,
                                                               std::span<const Option> options) const {
    const json body{{"task", "conviction"},
                    {"model", endpoint_.model},
                    {"text", message.text},
                    {"options", std::vector<Option>(options.begin(), options.end())}};
    auto [reply, err] = post_json(endpoint_, body);
    std::vector<ConvictionEvent> out;
    if (!reply || !reply->is_object() || !reply->contains("events") || !reply->at("events").is_array()) return out;

    std::array<bool, kOptionCount> seen{};
    for (const auto& item : reply->at("events")) {
        if (!item.is_object() || !item.contains("option") || !item.contains("strength")) continue;
        if (!item.at("option").is_string() || !item.at("strength").is_number()) continue;
        const auto opt = parse_option(item.at("option").get<std::string>());
        if (!opt || std::find(options.begin(), options.end(), *opt) == options.end()) continue;
        if (seen[option_index(*opt)]) continue;
        seen[option_index(*opt)] = true;
        const double s = std::clamp(item.at("strength").get<double>(), -1.0, 1.0);
        out.push_back(ConvictionEvent{message.subgroup_id, *opt, s, message.t_ms, message.id});
    }
    std::sort(out.begin(), out.end(),
              [](const ConvictionEvent& a, const ConvictionEvent& b) { return a.option < b.option; });
    return out;
}

std::shared_ptr<const ConvictionEstimator> make_estimator(EstimatorKind kind) {
    if (kind == EstimatorKind::llm) return std::make_shared<HttpConvictionEstimator>(LlmEndpoint::from_env());
    return std::make_shared<LexicalEstimator>();
}

std::shared_ptr<RelayBackend> make_relay_backend(BackendKind kind) {
    if (kind == BackendKind::llm) return std::make_shared<HttpRelayBackend>(LlmEndpoint::from_env());
    return std::make_shared<StubRelayBackend>();
}

}  // namespace csi
