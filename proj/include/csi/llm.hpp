#pragma once

// HTTP-backed estimator and relay backend. Both speak a small JSON protocol
// to a configurable endpoint, typically a proxy in front of a hosted model.
//
//   relay:      POST {task:"relay_summary", model, option, insight_text,
//                     transcript:[{author, text}]}      -> {summary_text}
//   conviction: POST {task:"conviction", model, text, options:[...]}
//                                                       -> {events:[{option, strength}]}

#include <chrono>
#include <memory>
#include <string>

#include "csi/conviction.hpp"
#include "csi/relay.hpp"

namespace csi {

struct LlmEndpoint {
    std::string url;  // http://host:port/path
    std::string api_key;
    std::string model = "default";
    std::chrono::milliseconds timeout{10000};

    /// Reads CSI_LLM_URL, CSI_LLM_KEY, CSI_LLM_TIMEOUT_MS and CSI_LLM_MODEL.
    static LlmEndpoint from_env();
};

class HttpRelayBackend final : public RelayBackend {
public:
    explicit HttpRelayBackend(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    /// Throws DistillFailed on transport errors, timeouts, malformed replies,
    /// or a summary that names a different option.
    std::string summarize(const SummaryRequest& request) override;

private:
    LlmEndpoint endpoint_;
};

class HttpConvictionEstimator final : public ConvictionEstimator {
public:
    explicit HttpConvictionEstimator(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    /// Any failure yields no events.
    std::vector<ConvictionEvent> estimate(const Message& message, std::span<const Option> options) const override;

private:
    LlmEndpoint endpoint_;
};

std::shared_ptr<const ConvictionEstimator> make_estimator(EstimatorKind kind);
std::shared_ptr<RelayBackend> make_relay_backend(BackendKind kind);

}  // namespace csi
