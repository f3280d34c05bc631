#include <doctest.h>

#include <filesystem>

#include "segrec/config.hpp"
#include "segrec/errors.hpp"
#include "segrec/io.hpp"
#include "segrec/report.hpp"

using namespace segrec;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("segrec_cfg_" + name);
  io::write_file_atomic(p, content);
  return p;
}

}  // namespace

TEST_CASE("toml subset parser") {
  const auto kv = config::parse_toml(
      "# comment\n"
      "title = \"hello # not a comment\"\n"
      "count = 7\n"
      "rate = 0.25\n"
      "flag = true\n"
      "nums = [1, 2.5, 3]\n"
      "names = [\"a\", \"b\"]\n"
      "[section]\n"
      "key = \"v\"\n"
      "[section.sub]\n"
      "k2 = 4\n");
  CHECK(std::get<std::string>(kv.at("title")) == "hello # not a comment");
  CHECK(std::get<std::int64_t>(kv.at("count")) == 7);
  CHECK(std::get<double>(kv.at("rate")) == doctest::Approx(0.25));
  CHECK(std::get<bool>(kv.at("flag")));
  CHECK(std::get<std::vector<double>>(kv.at("nums")) == std::vector<double>{1, 2.5, 3});
  CHECK(std::get<std::vector<std::string>>(kv.at("names")) ==
        std::vector<std::string>{"a", "b"});
  CHECK(std::get<std::string>(kv.at("section.key")) == "v");
  CHECK(std::get<std::int64_t>(kv.at("section.sub.k2")) == 4);
  CHECK_THROWS_AS(config::parse_toml("oops\n"), ParseError);
  CHECK_THROWS_AS(config::parse_toml("x = [1, \"a\"]\n"), ParseError);
}

TEST_CASE("defaults carry the published protocol parameters") {
  const auto cfg = config::default_config();
  CHECK(cfg.llm.n_instances == 20);
  CHECK(cfg.llm.temperatures == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(cfg.llm.max_output_tokens == 4096);
  CHECK(cfg.consistency_iterations == 100);
  CHECK(cfg.split_half_iterations == 10000);
  CHECK(cfg.group_size == 10);
  CHECK(cfg.tolerance == 0);
  CHECK(cfg.llm.retry.max_attempts == 5);
  CHECK(cfg.llm.retry.initial_delay_ms == 1000);
}

TEST_CASE("load_config applies overrides and validates") {
  SUBCASE("round trip of common keys") {
    const auto path = write_config("ok.toml",
                                   "narratives = [\"a.txt\", \"b.txt\"]\n"
                                   "seed = 99\n"
                                   "tolerance = 1\n"
                                   "[llm]\n"
                                   "backend = \"mock\"\n"
                                   "temperatures = [0, 1]\n"
                                   "n_instances = 4\n"
                                   "mock_substitution_rate = 0.05\n"
                                   "[llm.ground_truth]\n"
                                   "story1 = [10, 20, 30]\n"
                                   "[embedding]\n"
                                   "backend = \"mock\"\n"
                                   "mock_dim = 16\n");
    const auto cfg = config::load_config(path);
    CHECK(cfg.narrative_paths == std::vector<std::string>{"a.txt", "b.txt"});
    CHECK(cfg.seed == 99);
    CHECK(cfg.tolerance == 1);
    CHECK(cfg.llm.n_instances == 4);
    CHECK(cfg.llm.temperatures == std::vector<double>{0.0, 1.0});
    CHECK(cfg.llm.mock_substitution_rate == doctest::Approx(0.05));
    CHECK(cfg.llm.mock_ground_truth.at("story1") == std::vector<int>{10, 20, 30});
    CHECK(cfg.embedding.mock_dim == 16);
  }
  SUBCASE("bad backend kind") {
    const auto path = write_config("badbk.toml", "[llm]\nbackend = \"cloud\"\n");
    CHECK_THROWS_AS(config::load_config(path), ConfigError);
  }
  SUBCASE("temperature outside [0,1]") {
    const auto path = write_config("badtemp.toml", "[llm]\ntemperatures = [0, 1.5]\n");
    CHECK_THROWS_AS(config::load_config(path), ConfigError);
  }
}

TEST_CASE("config hash is stable and sensitive") {
  const auto cfg = config::default_config();
  CHECK(config::config_hash(cfg) == config::config_hash(cfg));
  CHECK(config::config_hash(cfg).size() == 16);
  auto changed = cfg;
  changed.llm.model_id = "some-other-model";
  CHECK(config::config_hash(changed) != config::config_hash(cfg));
  auto reseeded = cfg;
  reseeded.seed = cfg.seed + 1;
  CHECK(config::config_hash(reseeded) != config::config_hash(cfg));
}

TEST_CASE("csv writer stamps provenance and enforces row width") {
  report::Provenance prov{"deadbeef", 42, "0.1.0"};
  report::CsvWriter csv(prov, {"a", "b"});
  csv.add_row({"1", "2"});
  CHECK_THROWS_AS(csv.add_row({"only-one"}), ValidationError);
  const fs::path p = fs::temp_directory_path() / "segrec_csv_test.csv";
  csv.write(p);
  const std::string content = io::read_text_file(p);
  CHECK(content.rfind("# generator=segrec 0.1.0 config=deadbeef seed=42\n", 0) == 0);
  CHECK(content.find("a,b\n1,2\n") != std::string::npos);
}
