#include <chrono>
#include <cstdlib>
#include <memory>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "epidiv/backends.hpp"
#include "epidiv/executor.hpp"
#include "epidiv/rng.hpp"

namespace epidiv {

namespace {

using Json = nlohmann::json;

struct ParsedUrl {
    std::string host_base;  // scheme://host[:port]
    std::string path;       // /v1/chat/completions
};

ParsedUrl parse_url(const std::string& url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw EpidivError(ErrorCode::ConfigError, "endpoint URL needs a scheme: " + url);
    }
    size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

// Shared request machinery: admission cap, auth header, retry with
// exponential backoff + jitter. 429 and 5xx are retryable; 401/403 abort as
// AuthError; other 4xx abort immediately.
class HttpEndpoint {
public:
    explicit HttpEndpoint(const BackendDescriptor& descriptor)
        : descriptor_(descriptor),
          url_(parse_url(descriptor.endpoint_url)),
          admission_(std::max(1, descriptor.max_in_flight)),
          jitter_rng_(fnv1a64(descriptor.endpoint_url)) {}

    Json post_json(const Json& body) {
        SemaphoreGuard guard(admission_);
        const int attempts = std::max(1, descriptor_.retry.max_attempts);
        std::string last_error;
        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) {
                backoff(attempt);
            }
            httplib::Client client(url_.host_base);
            client.set_connection_timeout(0, descriptor_.timeout_ms * 1000LL);
            client.set_read_timeout(descriptor_.timeout_ms / 1000, (descriptor_.timeout_ms % 1000) * 1000);
            client.set_write_timeout(descriptor_.timeout_ms / 1000, (descriptor_.timeout_ms % 1000) * 1000);
            httplib::Headers headers;
            if (!descriptor_.credential_env.empty()) {
                const char* secret = std::getenv(descriptor_.credential_env.c_str());
                if (secret == nullptr || *secret == '\0') {
                    throw EpidivError(ErrorCode::AuthError,
                                      "credential env var " + descriptor_.credential_env +
                                          " is not set");
                }
                headers.emplace("Authorization", std::string("Bearer ") + secret);
            }
            auto result = client.Post(url_.path, headers, body.dump(), "application/json");
            if (!result) {
                last_error = "transport error: " + httplib::to_string(result.error());
                continue;
            }
            int status = result->status;
            if (status == 200) {
                Json parsed = Json::parse(result->body, nullptr, false);
                if (parsed.is_discarded()) {
                    throw EpidivError(ErrorCode::ResponseMalformed,
                                      "service returned invalid JSON");
                }
                return parsed;
            }
            if (status == 401 || status == 403) {
                throw EpidivError(ErrorCode::AuthError,
                                  "service rejected credentials (HTTP " +
                                      std::to_string(status) + ")");
            }
            if (status >= 400 && status < 500 && status != 429) {
                throw EpidivError(ErrorCode::BackendUnavailable,
                                  "non-retryable HTTP " + std::to_string(status) + ": " +
                                      result->body.substr(0, 200));
            }
            last_error = "HTTP " + std::to_string(status);
        }
        throw EpidivError(ErrorCode::BackendUnavailable,
                          "retries exhausted against " + descriptor_.endpoint_url + " (" +
                              last_error + ")");
    }

    const BackendDescriptor& descriptor() const { return descriptor_; }

private:
    void backoff(int attempt) {
        int64_t base = std::max(1, descriptor_.retry.base_backoff_ms);
        int64_t delay = base << std::min(attempt - 1, 16);
        int64_t jitter;
        {
            std::lock_guard<std::mutex> lock(jitter_mutex_);
            jitter = static_cast<int64_t>(jitter_rng_.next_below(static_cast<uint64_t>(delay) + 1));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(delay + jitter));
    }

    BackendDescriptor descriptor_;
    ParsedUrl url_;
    Semaphore admission_;
    std::mutex jitter_mutex_;
    Rng jitter_rng_;
};

class HttpGenerationBackend : public GenerationBackend {
public:
    explicit HttpGenerationBackend(const BackendDescriptor& descriptor) : endpoint_(descriptor) {}

    std::string generate(const GenerationRequest& request) override {
        Json body;
        body["model"] = endpoint_.descriptor().model_name;
        body["messages"] = Json::array({Json{{"role", "user"}, {"content", request.prompt}}});
        body["top_p"] = request.top_p;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;
        body["seed"] = request.seed;
        Json response = endpoint_.post_json(body);
        try {
            return response.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const Json::exception&) {
            throw EpidivError(ErrorCode::ResponseMalformed,
                              "completion response missing choices[0].message.content");
        }
    }

private:
    HttpEndpoint endpoint_;
};

class HttpEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(const BackendDescriptor& descriptor) : endpoint_(descriptor) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        Json body;
        body["model"] = endpoint_.descriptor().model_name;
        body["texts"] = texts;
        Json response = endpoint_.post_json(body);
        std::vector<EmbeddingVector> vectors;
        try {
            for (const auto& row : response.at("embeddings")) {
                EmbeddingVector v;
                v.values = row.get<std::vector<double>>();
                vectors.push_back(std::move(v));
            }
        } catch (const Json::exception&) {
            throw EpidivError(ErrorCode::ResponseMalformed,
                              "embedding response missing embeddings array");
        }
        return vectors;
    }

private:
    HttpEndpoint endpoint_;
};

class HttpEntailmentBackend : public EntailmentBackend {
public:
    explicit HttpEntailmentBackend(const BackendDescriptor& descriptor) : endpoint_(descriptor) {}

    EntailmentJudgment entails(const std::string& premise, const std::string& hypothesis) override {
        Json body;
        body["model"] = endpoint_.descriptor().model_name;
        body["premise"] = premise;
        body["hypothesis"] = hypothesis;
        Json response = endpoint_.post_json(body);
        try {
            const Json& probs = response.at("probs");
            return EntailmentJudgment::from_probs(probs.value("entailment", 0.0),
                                                  probs.value("neutral", 0.0),
                                                  probs.value("contradiction", 0.0));
        } catch (const Json::exception&) {
            throw EpidivError(ErrorCode::ResponseMalformed,
                              "entailment response missing probs object");
        }
    }

private:
    HttpEndpoint endpoint_;
};

}  // namespace

std::shared_ptr<GenerationBackend> make_http_generation_backend(const BackendDescriptor& descriptor) {
    return std::make_shared<HttpGenerationBackend>(descriptor);
}

std::shared_ptr<EmbeddingBackend> make_http_embedding_backend(const BackendDescriptor& descriptor) {
    return std::make_shared<HttpEmbeddingBackend>(descriptor);
}

std::shared_ptr<EntailmentBackend> make_http_entailment_backend(const BackendDescriptor& descriptor) {
    return std::make_shared<HttpEntailmentBackend>(descriptor);
}

}  // namespace epidiv
