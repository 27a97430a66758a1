#include "poisonguard/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>

#include "poisonguard/errors.hpp"
#include "poisonguard/rng.hpp"
#include "poisonguard/text.hpp"

namespace pg {

std::string to_string(BackendKind k) {
  switch (k) {
    case BackendKind::RemoteChat: return "remote_chat";
    case BackendKind::MockScripted: return "mock_scripted";
    case BackendKind::OracleKnn: return "oracle_knn";
  }
  return "mock_scripted";
}

BackendKind backend_kind_from_string(const std::string& s) {
  std::string n = text::lower(text::trim(s));
  if (n == "remote_chat" || n == "remote") return BackendKind::RemoteChat;
  if (n == "mock_scripted" || n == "mock") return BackendKind::MockScripted;
  if (n == "oracle_knn" || n == "oracle") return BackendKind::OracleKnn;
  throw ConfigError("unknown backend kind: " + s);
}

void BackendDescriptor::validate() const {
  if (retry.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
  if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
  switch (kind) {
    case BackendKind::RemoteChat:
      if (endpoint_url.empty()) throw ConfigError("remote backend needs an endpoint URL");
      if (model.empty()) throw ConfigError("remote backend needs a model name");
      break;
    case BackendKind::MockScripted:
      if (script_path.empty()) throw ConfigError("mock backend needs a script path");
      break;
    case BackendKind::OracleKnn:
      if (oracle_model_path.empty()) throw ConfigError("oracle backend needs a model path");
      break;
  }
}

std::string BackendDescriptor::id() const {
  switch (kind) {
    case BackendKind::RemoteChat: return "remote:" + model;
    case BackendKind::MockScripted: return "mock:" + script_path;
    case BackendKind::OracleKnn: return "oracle:" + oracle_model_path;
  }
  return "unknown";
}

io::ordered_json LlmExchange::to_json() const {
  return {{"window_id", window_id},
          {"backend", to_string(backend)},
          {"prompt_chars", prompt_chars},
          {"response_chars", response_chars},
          {"latency_seconds", latency_seconds},
          {"attempts", attempts},
          {"prompt", prompt_text},
          {"response", response_text}};
}

LlmExchange LlmExchange::from_json(const io::ordered_json& j) {
  LlmExchange e;
  e.window_id = j.at("window_id").get<std::string>();
  e.backend = backend_kind_from_string(j.at("backend").get<std::string>());
  e.prompt_chars = j.at("prompt_chars").get<std::size_t>();
  e.response_chars = j.at("response_chars").get<std::size_t>();
  e.latency_seconds = j.at("latency_seconds").get<double>();
  e.attempts = j.at("attempts").get<int>();
  e.prompt_text = j.at("prompt").get<std::string>();
  e.response_text = j.at("response").get<std::string>();
  return e;
}

// --- mock ---

namespace {

Backend::Reply reply_from_entry(const io::ordered_json& entry) {
  Backend::Reply r;
  if (entry.is_string()) {
    r.text = entry.get<std::string>();
  } else {
    r.text = entry.at("response").get<std::string>();
    if (entry.contains("latency_seconds"))
      r.scripted_latency = entry["latency_seconds"].get<double>();
  }
  return r;
}

}  // namespace

MockScriptedBackend::MockScriptedBackend(const std::string& script_path)
    : MockScriptedBackend(io::ordered_json::parse(io::read_file(script_path))) {}

MockScriptedBackend::MockScriptedBackend(const io::ordered_json& script) {
  if (!script.is_object()) throw ConfigError("mock script must be a JSON object");
  for (auto it = script.begin(); it != script.end(); ++it) {
    if (it.key() == "default") {
      default_reply_ = reply_from_entry(it.value());
    } else {
      entries_[it.key()] = reply_from_entry(it.value());
    }
  }
  fingerprint_ = io::content_fingerprint(script.dump());
}

Backend::Reply MockScriptedBackend::respond(const PromptInstance& prompt,
                                            const LabeledWindow*) {
  auto it = entries_.find(prompt.window_id);
  if (it != entries_.end()) return it->second;
  if (default_reply_) return *default_reply_;
  throw ScriptMiss(prompt.window_id);
}

// --- oracle ---

OracleKnnBackend::OracleKnnBackend(std::shared_ptr<const KnnModel> model)
    : model_(std::move(model)) {
  if (!model_ || !model_->trained()) throw UntrainedOracle();
  // Cache identity covers the model content, not just its shape.
  std::string payload(reinterpret_cast<const char*>(model_->features.data()),
                      model_->features.size() * sizeof(float));
  payload.append(reinterpret_cast<const char*>(model_->labels.data()),
                 model_->labels.size() * sizeof(std::int32_t));
  payload += std::to_string(model_->k);
  id_ = "oracle:" + io::content_fingerprint(payload);
}

std::string OracleKnnBackend::id() const { return id_; }

std::string oracle_response_text(const std::string& predicted, const std::string& reported) {
  if (predicted == reported) {
    return "The sensor readings are consistent with the reported activity \"" + reported +
           "\".\n\nPOISONED: no\nCORRECT_LABEL: N/A";
  }
  return "The sensor readings match the nearest-neighbor profile of \"" + predicted +
         "\", not the reported activity \"" + reported +
         "\".\n\nPOISONED: yes\nCORRECT_LABEL: " + predicted;
}

Backend::Reply OracleKnnBackend::respond(const PromptInstance& prompt,
                                         const LabeledWindow* window) {
  if (!window)
    throw BackendError("oracle backend needs the query window for " + prompt.window_id);
  std::string predicted = model_->predict_window(*window);
  return {oracle_response_text(predicted, prompt.reported_label), std::nullopt};
}

// --- remote chat ---

RemoteChatBackend::RemoteChatBackend(const BackendDescriptor& desc) : desc_(desc) {
  desc_.validate();
  const char* key = std::getenv(desc_.credential_env.c_str());
  if (!key || !*key) throw AuthMissing(desc_.credential_env);
  api_key_ = key;

  // Split "http[s]://host[:port]" from the request path.
  std::size_t scheme = desc_.endpoint_url.find("://");
  if (scheme == std::string::npos)
    throw ConfigError("endpoint URL needs a scheme: " + desc_.endpoint_url);
  std::size_t path_start = desc_.endpoint_url.find('/', scheme + 3);
  if (path_start == std::string::npos) {
    host_ = desc_.endpoint_url;
    path_ = "/v1/chat/completions";
  } else {
    host_ = desc_.endpoint_url.substr(0, path_start);
    path_ = desc_.endpoint_url.substr(path_start);
  }
}

Backend::Reply RemoteChatBackend::respond(const PromptInstance& prompt, const LabeledWindow*) {
  io::ordered_json body;
  body["model"] = desc_.model;
  body["temperature"] = desc_.temperature;
  body["messages"] = io::ordered_json::array({io::ordered_json{
      {"role", "user"}, {"content", prompt.text}}});

  httplib::Client client(host_);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(300, 0);
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res)
    throw BackendUnavailable("no response from " + host_ + ": " +
                             httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw BackendUnavailable("HTTP " + std::to_string(res->status) + " from " + host_ +
                             ": " + res->body.substr(0, 200));

  io::ordered_json parsed = io::ordered_json::parse(res->body, nullptr, false);
  if (parsed.is_discarded())
    throw BackendUnavailable("malformed JSON response from " + host_);
  try {
    return {parsed.at("choices").at(0).at("message").at("content").get<std::string>(),
            std::nullopt};
  } catch (const io::ordered_json::exception&) {
    throw BackendUnavailable("chat response missing choices[0].message.content");
  }
}

bool RemoteChatBackend::transient(const std::exception& e) const {
  return dynamic_cast<const BackendUnavailable*>(&e) != nullptr;
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& desc) {
  desc.validate();
  switch (desc.kind) {
    case BackendKind::MockScripted:
      return std::make_unique<MockScriptedBackend>(desc.script_path);
    case BackendKind::OracleKnn:
      return std::make_unique<OracleKnnBackend>(
          std::make_shared<const KnnModel>(KnnModel::load(desc.oracle_model_path)));
    case BackendKind::RemoteChat:
      return std::make_unique<RemoteChatBackend>(desc);
  }
  throw ConfigError("unsupported backend kind");
}

// --- cache ---

ExchangeCache::ExchangeCache(std::string path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  auto rows = io::read_jsonl(path_, [this](std::size_t lineno, const std::string&) {
    std::cerr << "warning: skipping corrupt cache entry at " << path_ << ":" << lineno
              << "\n";
  });
  for (const auto& row : rows) {
    try {
      entries_[row.at("key").get<std::string>()] = LlmExchange::from_json(row.at("exchange"));
    } catch (const std::exception&) {
      std::cerr << "warning: skipping malformed cache entry in " << path_ << "\n";
    }
  }
}

std::string ExchangeCache::key(const std::string& backend_id, const std::string& prompt_text) {
  return io::content_fingerprint(backend_id + '\x1f' + prompt_text);
}

std::optional<LlmExchange> ExchangeCache::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ExchangeCache::store(const std::string& key, const LlmExchange& exchange) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[key] = exchange;
  if (path_.empty()) return;
  std::filesystem::path p(path_);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path_, std::ios::app);
  io::ordered_json row = {{"key", key}, {"exchange", exchange.to_json()}};
  out << row.dump() << "\n";
}

std::size_t ExchangeCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

// --- submit ---

LlmExchange submit(Backend& backend, const PromptInstance& prompt, const RetryPolicy& retry,
                   const LabeledWindow* window, ExchangeCache* cache) {
  auto start = std::chrono::steady_clock::now();
  Backend::Reply reply;
  int attempt = 0;
  double backoff = retry.initial_backoff_seconds;
  while (true) {
    ++attempt;
    try {
      reply = backend.respond(prompt, window);
      break;
    } catch (const std::exception& e) {
      if (attempt >= retry.max_attempts || !backend.transient(e)) throw;
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= retry.backoff_multiplier;
    }
  }
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  LlmExchange exchange;
  exchange.window_id = prompt.window_id;
  exchange.prompt_text = prompt.text;
  exchange.response_text = reply.text;
  exchange.prompt_chars = prompt.char_count;
  exchange.response_chars = text::utf8_scalar_count(reply.text);
  exchange.latency_seconds = reply.scripted_latency.value_or(elapsed);
  exchange.attempts = attempt;
  exchange.backend = backend.kind();
  if (cache) cache->store(ExchangeCache::key(backend.id(), prompt.text), exchange);
  return exchange;
}

}  // namespace pg
