#include "segrec/embed.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "segrec/corpus.hpp"
#include "segrec/errors.hpp"
#include "segrec/io.hpp"
#include "segrec/stats.hpp"

namespace segrec::embed {

namespace {

using nlohmann::json;

void check_not_constant(const EmbeddingVector& v) {
  if (v.values.size() < 2 || v.values.maxCoeff() == v.values.minCoeff()) {
    throw IntegrityError("constant embedding vector for segment " + v.owner_id + "[" +
                         std::to_string(v.event_index) + "]: rank correlation undefined");
  }
}

json vector_to_json(const EmbeddingVector& v) {
  json j;
  j["owner_id"] = v.owner_id;
  j["event_index"] = v.event_index;
  j["model_id"] = v.model_id;
  j["values"] = std::vector<double>(v.values.data(), v.values.data() + v.values.size());
  return j;
}

EmbeddingVector vector_from_json(const json& j) {
  EmbeddingVector v;
  v.owner_id = j.at("owner_id").get<std::string>();
  v.event_index = j.at("event_index").get<int>();
  v.model_id = j.at("model_id").get<std::string>();
  const auto& vals = j.at("values");
  v.values.resize(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index k = 0;
  for (const auto& x : vals) v.values[k++] = x.get<double>();
  return v;
}

}  // namespace

HttpEmbedBackend::HttpEmbedBackend(std::string base_url, std::string api_key_env,
                                   int max_attempts, int initial_delay_ms)
    : base_url_(std::move(base_url)),
      api_key_env_(std::move(api_key_env)),
      max_attempts_(max_attempts),
      initial_delay_ms_(initial_delay_ms) {}

std::vector<Eigen::VectorXd> HttpEmbedBackend::embed(const std::vector<std::string>& texts,
                                                     const std::string& model_id) {
  auto scheme_end = base_url_.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("base_url must include a scheme: " + base_url_);
  }
  auto path_start = base_url_.find('/', scheme_end + 3);
  std::string host = path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  json body;
  body["model"] = model_id;
  body["input"] = texts;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_env_.empty()) {
    if (const char* key = std::getenv(api_key_env_.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt < max_attempts_; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(initial_delay_ms_ << (attempt - 1)));
    }
    httplib::Client client(host);
    client.set_read_timeout(300, 0);
    auto res = client.Post(prefix + "/embeddings", headers, payload, "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 400) {
      if (res->status == 408 || res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      throw ConfigError("embeddings returned HTTP " + std::to_string(res->status) + ": " +
                        res->body);
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception& ex) {
      last_error = std::string("bad JSON in response: ") + ex.what();
      continue;
    }
    if (!reply.contains("data")) {
      last_error = "response has no data array";
      continue;
    }
    std::vector<Eigen::VectorXd> out(texts.size());
    for (const auto& item : reply["data"]) {
      const int idx = item.value("index", -1);
      if (idx < 0 || idx >= static_cast<int>(texts.size())) {
        throw IntegrityError("embedding response index out of range");
      }
      const auto& vals = item.at("embedding");
      Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
      Eigen::Index k = 0;
      for (const auto& x : vals) v[k++] = x.get<double>();
      out[static_cast<std::size_t>(idx)] = std::move(v);
    }
    return out;
  }
  throw TransportError("embeddings failed after " + std::to_string(max_attempts_) +
                       " attempts; last error: " + last_error);
}

std::vector<Eigen::VectorXd> MockEmbedBackend::embed(const std::vector<std::string>& texts,
                                                     const std::string& model_id) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  const std::uint64_t model_mix = io::fnv1a64(model_id);
  for (const std::string& text : texts) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
    int n_tokens = 0;
    for (const corpus::Token& tok : corpus::tokenize(text)) {
      const std::string& word = tok.normalized.empty() ? tok.surface : tok.normalized;
      stats::RngStream rng(seed_, io::fnv1a64(word) ^ model_mix);
      for (int d = 0; d < dim_; ++d) sum[d] += rng.normal();
      ++n_tokens;
    }
    if (n_tokens == 0) {
      throw ValidationError("cannot embed empty segment text");
    }
    const double norm = sum.norm();
    out.push_back(norm > 0.0 ? Eigen::VectorXd(sum / norm) : sum);
  }
  return out;
}

std::vector<EmbeddingVector> embed_texts(const std::vector<SegmentRecord>& segments,
                                         const std::string& model_id, EmbedBackend& backend,
                                         const std::optional<std::filesystem::path>& cache_dir) {
  if (segments.empty()) {
    throw ValidationError("embed_texts: no segments");
  }
  std::vector<EmbeddingVector> out(segments.size());
  std::vector<std::size_t> missing;
  std::vector<std::string> missing_texts;

  for (std::size_t i = 0; i < segments.size(); ++i) {
    out[i].owner_id = segments[i].owner_id;
    out[i].event_index = segments[i].event_index;
    out[i].model_id = model_id;
    if (cache_dir) {
      const std::filesystem::path file =
          *cache_dir / (io::sha256_hex(model_id + '\x1f' + segments[i].text) + ".json");
      if (std::filesystem::exists(file)) {
        const json j = json::parse(io::read_text_file(file));
        out[i].values.resize(static_cast<Eigen::Index>(j.size()));
        Eigen::Index k = 0;
        for (const auto& x : j) out[i].values[k++] = x.get<double>();
        continue;
      }
    }
    missing.push_back(i);
    missing_texts.push_back(segments[i].text);
  }

  if (!missing.empty()) {
    const std::vector<Eigen::VectorXd> fresh = backend.embed(missing_texts, model_id);
    if (fresh.size() != missing.size()) {
      throw IntegrityError("backend returned " + std::to_string(fresh.size()) +
                           " vectors for " + std::to_string(missing.size()) + " texts");
    }
    for (std::size_t k = 0; k < missing.size(); ++k) {
      out[missing[k]].values = fresh[k];
      if (cache_dir) {
        const json j =
            std::vector<double>(fresh[k].data(), fresh[k].data() + fresh[k].size());
        io::write_file_atomic(
            *cache_dir /
                (io::sha256_hex(model_id + '\x1f' + missing_texts[k]) + ".json"),
            j.dump());
      }
    }
  }

  const Eigen::Index dim = out.front().values.size();
  for (const EmbeddingVector& v : out) {
    if (v.values.size() != dim) {
      throw IntegrityError("dimension mismatch within model " + model_id + ": " +
                           std::to_string(v.values.size()) + " vs " + std::to_string(dim));
    }
    check_not_constant(v);
  }
  return out;
}

std::vector<EmbeddingVector> import_vectors(const std::filesystem::path& path) {
  const std::string content = io::read_text_file(path);
  std::vector<EmbeddingVector> out;
  std::set<std::tuple<std::string, int, std::string>> seen;
  std::map<std::string, Eigen::Index> dims;
  std::size_t line_no = 0;
  for (const std::string& line : io::split(content, '\n')) {
    ++line_no;
    const std::string trimmed = io::trim(line);
    if (trimmed.empty()) continue;
    EmbeddingVector v;
    try {
      v = vector_from_json(json::parse(trimmed));
    } catch (const json::exception& ex) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (!seen.insert({v.owner_id, v.event_index, v.model_id}).second) {
      throw IntegrityError(path.string() + ": duplicate segment ref " + v.owner_id + "[" +
                           std::to_string(v.event_index) + "] for model " + v.model_id);
    }
    auto [it, inserted] = dims.try_emplace(v.model_id, v.values.size());
    if (!inserted && it->second != v.values.size()) {
      throw IntegrityError(path.string() + ": line " + std::to_string(line_no) +
                           ": dimension " + std::to_string(v.values.size()) +
                           " does not match earlier " + std::to_string(it->second) +
                           " for model " + v.model_id);
    }
    check_not_constant(v);
    out.push_back(std::move(v));
  }
  return out;
}

void export_vectors(const std::filesystem::path& path,
                    const std::vector<EmbeddingVector>& vectors) {
  std::ostringstream out;
  for (const EmbeddingVector& v : vectors) {
    out << vector_to_json(v).dump() << '\n';
  }
  io::write_file_atomic(path, out.str());
}

}  // namespace segrec::embed
