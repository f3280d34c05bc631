#include "segrec/config.hpp"

#include <charconv>
#include <sstream>

#include "segrec/errors.hpp"
#include "segrec/io.hpp"

namespace segrec::config {

namespace {

bool looks_like_number(const std::string& s) {
  if (s.empty()) return false;
  const char c = s[0];
  return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

TomlValue parse_scalar(const std::string& raw, std::size_t line_no) {
  const std::string v = io::trim(raw);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (looks_like_number(v)) {
    if (v.find('.') == std::string::npos && v.find('e') == std::string::npos &&
        v.find('E') == std::string::npos) {
      std::int64_t iv = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), iv);
      if (ec == std::errc() && p == v.data() + v.size()) return iv;
    }
    try {
      std::size_t pos = 0;
      const double dv = std::stod(v, &pos);
      if (pos == v.size()) return dv;
    } catch (...) {
    }
  }
  throw ParseError("config line " + std::to_string(line_no) + ": cannot parse value '" + v + "'");
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(const std::string& content) {
  std::map<std::string, TomlValue> out;
  std::string section;
  std::size_t line_no = 0;
  for (const std::string& raw : io::split(content, '\n')) {
    ++line_no;
    std::string line = raw;
    // Strip comments outside of strings.
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line = line.substr(0, i);
        break;
      }
    }
    line = io::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = io::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = io::trim(line.substr(0, eq));
    const std::string value = io::trim(line.substr(eq + 1));
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') {
        throw ParseError("config line " + std::to_string(line_no) + ": unterminated array");
      }
      const std::string inner = io::trim(value.substr(1, value.size() - 2));
      std::vector<std::string> strings;
      std::vector<double> numbers;
      bool any_string = false;
      if (!inner.empty()) {
        for (const std::string& part : io::split(inner, ',')) {
          TomlValue v = parse_scalar(part, line_no);
          if (std::holds_alternative<std::string>(v)) {
            any_string = true;
            strings.push_back(std::get<std::string>(v));
          } else if (std::holds_alternative<std::int64_t>(v)) {
            numbers.push_back(static_cast<double>(std::get<std::int64_t>(v)));
          } else if (std::holds_alternative<double>(v)) {
            numbers.push_back(std::get<double>(v));
          } else {
            throw ParseError("config line " + std::to_string(line_no) +
                             ": unsupported array element");
          }
        }
      }
      if (any_string && !numbers.empty()) {
        throw ParseError("config line " + std::to_string(line_no) + ": mixed array types");
      }
      if (any_string) {
        out[full_key] = strings;
      } else {
        out[full_key] = numbers;
      }
      continue;
    }
    out[full_key] = parse_scalar(value, line_no);
  }
  return out;
}

PipelineConfig default_config() { return PipelineConfig{}; }

namespace {

class Reader {
 public:
  explicit Reader(std::map<std::string, TomlValue> values) : values_(std::move(values)) {}

  void get(const char* key, std::string& target) {
    if (auto it = values_.find(key); it != values_.end()) {
      target = expect<std::string>(key, it->second);
    }
  }
  void get(const char* key, int& target) {
    if (auto it = values_.find(key); it != values_.end()) {
      target = static_cast<int>(expect<std::int64_t>(key, it->second));
    }
  }
  void get(const char* key, std::uint64_t& target) {
    if (auto it = values_.find(key); it != values_.end()) {
      target = static_cast<std::uint64_t>(expect<std::int64_t>(key, it->second));
    }
  }
  void get(const char* key, double& target) {
    if (auto it = values_.find(key); it != values_.end()) {
      if (std::holds_alternative<std::int64_t>(it->second)) {
        target = static_cast<double>(std::get<std::int64_t>(it->second));
      } else {
        target = expect<double>(key, it->second);
      }
    }
  }
  void get(const char* key, std::vector<double>& target) {
    if (auto it = values_.find(key); it != values_.end()) {
      target = expect<std::vector<double>>(key, it->second);
    }
  }
  void get(const char* key, std::vector<std::string>& target) {
    if (auto it = values_.find(key); it != values_.end()) {
      target = expect<std::vector<std::string>>(key, it->second);
    }
  }
  void get_backend(const char* key, BackendKind& target) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    if (s == "http") {
      target = BackendKind::kHttp;
    } else if (s == "mock") {
      target = BackendKind::kMock;
    } else {
      throw ConfigError(std::string(key) + " must be http or mock, got '" + s + "'");
    }
  }

  const std::map<std::string, TomlValue>& values() const { return values_; }

 private:
  template <typename T>
  T expect(const char* key, const TomlValue& v) {
    if (!std::holds_alternative<T>(v)) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
    return std::get<T>(v);
  }

  std::map<std::string, TomlValue> values_;
};

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
  Reader r(parse_toml(io::read_text_file(path)));
  PipelineConfig cfg;
  r.get("narratives", cfg.narrative_paths);
  r.get("out_dir", cfg.out_dir);
  r.get("seed", cfg.seed);
  r.get("tolerance", cfg.tolerance);
  r.get("group_size", cfg.group_size);
  r.get("consistency_iterations", cfg.consistency_iterations);
  r.get("split_half_iterations", cfg.split_half_iterations);
  r.get("rating_scale", cfg.rating_scale);
  r.get("baseline_mode", cfg.baseline_mode);
  r.get("annotations", cfg.annotations_path);
  r.get("ratings", cfg.ratings_path);
  r.get("recalls", cfg.recalls_path);
  r.get("human_scores", cfg.human_scores_path);

  r.get_backend("llm.backend", cfg.llm.backend);
  r.get("llm.base_url", cfg.llm.base_url);
  r.get("llm.api_key_env", cfg.llm.api_key_env);
  r.get("llm.model_id", cfg.llm.model_id);
  r.get("llm.temperatures", cfg.llm.temperatures);
  r.get("llm.n_instances", cfg.llm.n_instances);
  r.get("llm.max_output_tokens", cfg.llm.max_output_tokens);
  r.get("llm.parallelism", cfg.llm.parallelism);
  r.get("llm.retry_max_attempts", cfg.llm.retry.max_attempts);
  r.get("llm.retry_initial_delay_ms", cfg.llm.retry.initial_delay_ms);
  r.get("llm.mock_substitution_rate", cfg.llm.mock_substitution_rate);
  r.get("llm.mock_segment_drop_rate", cfg.llm.mock_segment_drop_rate);
  r.get("llm.mock_boundary_jitter_sd", cfg.llm.mock_boundary_jitter_sd);
  r.get("llm.mock_auto_events", cfg.llm.mock_auto_events);

  // [llm.ground_truth] narrative_id = [indices]
  for (const auto& [key, value] : r.values()) {
    const std::string prefix = "llm.ground_truth.";
    if (key.rfind(prefix, 0) == 0) {
      if (!std::holds_alternative<std::vector<double>>(value)) {
        throw ConfigError("ground truth for '" + key + "' must be an index array");
      }
      std::vector<int> indices;
      for (double d : std::get<std::vector<double>>(value)) {
        indices.push_back(static_cast<int>(d));
      }
      cfg.llm.mock_ground_truth[key.substr(prefix.size())] = std::move(indices);
    }
  }

  r.get_backend("embedding.backend", cfg.embedding.backend);
  r.get("embedding.base_url", cfg.embedding.base_url);
  r.get("embedding.api_key_env", cfg.embedding.api_key_env);
  r.get("embedding.model_id", cfg.embedding.model_id);
  r.get("embedding.mock_dim", cfg.embedding.mock_dim);

  if (cfg.llm.n_instances < 1 || cfg.consistency_iterations < 1 ||
      cfg.split_half_iterations < 1 || cfg.group_size < 1) {
    throw ConfigError("counts in config must be >= 1");
  }
  for (double t : cfg.llm.temperatures) {
    if (t < 0.0 || t > 1.0) {
      throw ConfigError("temperatures must lie in [0, 1]");
    }
  }
  if (cfg.rating_scale != "tenths" && cfg.rating_scale != "ninths") {
    throw ConfigError("rating_scale must be tenths or ninths");
  }
  if (cfg.baseline_mode != "average" && cfg.baseline_mode != "pool") {
    throw ConfigError("baseline_mode must be average or pool");
  }
  return cfg;
}

std::string canonical_string(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "narratives=";
  for (const std::string& p : cfg.narrative_paths) out << p << ';';
  out << "\nseed=" << cfg.seed << "\ntolerance=" << cfg.tolerance
      << "\ngroup_size=" << cfg.group_size
      << "\nconsistency_iterations=" << cfg.consistency_iterations
      << "\nsplit_half_iterations=" << cfg.split_half_iterations
      << "\nrating_scale=" << cfg.rating_scale << "\nbaseline_mode=" << cfg.baseline_mode
      << "\nllm.backend=" << (cfg.llm.backend == BackendKind::kHttp ? "http" : "mock")
      << "\nllm.model_id=" << cfg.llm.model_id << "\nllm.temperatures=";
  for (double t : cfg.llm.temperatures) out << io::fmt_exact(t) << ';';
  out << "\nllm.n_instances=" << cfg.llm.n_instances
      << "\nllm.max_output_tokens=" << cfg.llm.max_output_tokens
      << "\nllm.mock_substitution_rate=" << io::fmt_exact(cfg.llm.mock_substitution_rate)
      << "\nllm.mock_segment_drop_rate=" << io::fmt_exact(cfg.llm.mock_segment_drop_rate)
      << "\nllm.mock_boundary_jitter_sd=" << io::fmt_exact(cfg.llm.mock_boundary_jitter_sd)
      << "\nllm.mock_auto_events=" << cfg.llm.mock_auto_events << "\nllm.ground_truth=";
  for (const auto& [id, idx] : cfg.llm.mock_ground_truth) {
    out << id << ':';
    for (int i : idx) out << i << ',';
    out << ';';
  }
  out << "\nembedding.backend="
      << (cfg.embedding.backend == BackendKind::kHttp ? "http" : "mock")
      << "\nembedding.model_id=" << cfg.embedding.model_id
      << "\nembedding.mock_dim=" << cfg.embedding.mock_dim << "\n";
  return out.str();
}

std::string config_hash(const PipelineConfig& cfg) {
  return io::sha256_hex(canonical_string(cfg)).substr(0, 16);
}

}  // namespace segrec::config
