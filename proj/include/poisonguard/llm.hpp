#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "poisonguard/baseline.hpp"
#include "poisonguard/prompt.hpp"

namespace pg {

enum class BackendKind { RemoteChat, MockScripted, OracleKnn };

std::string to_string(BackendKind k);
BackendKind backend_kind_from_string(const std::string& s);

struct RetryPolicy {
  int max_attempts = 3;              // >= 1
  double initial_backoff_seconds = 0.5;
  double backoff_multiplier = 2.0;
};

struct BackendDescriptor {
  BackendKind kind = BackendKind::MockScripted;

  // RemoteChat: a generic JSON chat-completions endpoint.
  std::string endpoint_url;
  std::string model;
  std::string credential_env = "POISONGUARD_API_KEY";
  double temperature = 0.0;

  // MockScripted.
  std::string script_path;

  // OracleKnn.
  std::string oracle_model_path;

  RetryPolicy retry;
  int max_concurrency = 1;  // sequential by default, matching how the
                            // published latency figures were collected

  void validate() const;
  std::string id() const;  // stable identity used in cache keys and reports
};

struct LlmExchange {
  std::string window_id;
  std::string prompt_text;
  std::string response_text;
  std::size_t prompt_chars = 0;    // Unicode scalar count of prompt_text
  std::size_t response_chars = 0;  // Unicode scalar count of response_text
  double latency_seconds = 0.0;
  int attempts = 1;
  BackendKind backend = BackendKind::MockScripted;

  io::ordered_json to_json() const;
  static LlmExchange from_json(const io::ordered_json& j);
};

// A response source. Implementations must be safe for concurrent respond()
// calls up to the descriptor's concurrency cap.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual BackendKind kind() const = 0;

  struct Reply {
    std::string text;
    // Scripted timing replayed from a mock script; wall clock otherwise.
    std::optional<double> scripted_latency;
  };

  // window may be null for backends that only consume the prompt text; the
  // oracle classifies the window itself.
  virtual Reply respond(const PromptInstance& prompt, const LabeledWindow* window) = 0;

  // Whether a failure of this kind is worth retrying.
  virtual bool transient(const std::exception&) const { return false; }
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& desc);

// Deterministic scripted responses keyed by window id, with an optional
// "default" entry. Script entries are either a bare string or an object
// {"response": ..., "latency_seconds": ...}.
class MockScriptedBackend : public Backend {
 public:
  explicit MockScriptedBackend(const std::string& script_path);
  explicit MockScriptedBackend(const io::ordered_json& script);

  std::string id() const override { return "mock:" + fingerprint_; }
  BackendKind kind() const override { return BackendKind::MockScripted; }
  Reply respond(const PromptInstance& prompt, const LabeledWindow* window) override;

 private:
  std::map<std::string, Reply> entries_;
  std::optional<Reply> default_reply_;
  std::string fingerprint_;
};

// Local KNN classifier speaking the LLM answer contract, so the full pipeline
// runs end to end without a remote model.
class OracleKnnBackend : public Backend {
 public:
  explicit OracleKnnBackend(std::shared_ptr<const KnnModel> model);

  std::string id() const override;
  BackendKind kind() const override { return BackendKind::OracleKnn; }
  Reply respond(const PromptInstance& prompt, const LabeledWindow* window) override;

  const KnnModel& model() const { return *model_; }

 private:
  std::shared_ptr<const KnnModel> model_;
  std::string id_;
};

// Response text the oracle emits for (predicted, reported): declares
// poisoning iff they disagree and proposes the predicted label.
std::string oracle_response_text(const std::string& predicted, const std::string& reported);

class RemoteChatBackend : public Backend {
 public:
  explicit RemoteChatBackend(const BackendDescriptor& desc);  // throws AuthMissing

  std::string id() const override { return "remote:" + desc_.model; }
  BackendKind kind() const override { return BackendKind::RemoteChat; }
  Reply respond(const PromptInstance& prompt, const LabeledWindow* window) override;
  bool transient(const std::exception& e) const override;

 private:
  BackendDescriptor desc_;
  std::string api_key_;
  std::string host_;
  std::string path_;
};

// Append-only content-addressed store of exchanges. Corrupt lines are skipped
// with a warning on stderr. Single writer, many readers.
class ExchangeCache {
 public:
  explicit ExchangeCache(std::string path);

  static std::string key(const std::string& backend_id, const std::string& prompt_text);

  std::optional<LlmExchange> lookup(const std::string& key) const;
  void store(const std::string& key, const LlmExchange& exchange);

  std::size_t size() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::map<std::string, LlmExchange> entries_;
};

// One round trip with retry and latency capture. Transient failures are
// retried with exponential backoff up to the policy's attempt budget; the
// recorded latency spans all attempts, and exactly one exchange comes back
// regardless of retries. The exchange is appended to the cache when given.
LlmExchange submit(Backend& backend, const PromptInstance& prompt,
                   const RetryPolicy& retry, const LabeledWindow* window = nullptr,
                   ExchangeCache* cache = nullptr);

}  // namespace pg
