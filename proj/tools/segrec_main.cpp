// segrec: batch pipeline for narrative event segmentation and recall scoring.
//
// Subcommands:
//   simulate     generate a synthetic dataset (narratives, annotations,
//                ratings, recall segments, gist scores) plus a ready config
//   segment      run the chat backend over narratives and extract boundaries
//   ingest-human validate human annotation CSVs into boundary JSONs
//   analyze-seg  boundary counts, agreement, shared/distinct, consistency,
//                normative boundaries, rating analysis, figures
//   embed        embed narrative events and recall segments into vectors
//   score-recall intersubject agreement and per-event recall scores
//   validate     split-half consistency and standardized regression
//   report       manifest over every artifact in the output directory

#include <Eigen/Core>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include "segrec/align.hpp"
#include "segrec/config.hpp"
#include "segrec/corpus.hpp"
#include "segrec/embed.hpp"
#include "segrec/errors.hpp"
#include "segrec/io.hpp"
#include "segrec/llm.hpp"
#include "segrec/recall.hpp"
#include "segrec/report.hpp"
#include "segrec/seg_metrics.hpp"
#include "segrec/simulate.hpp"
#include "segrec/stats.hpp"
#include "segrec/version.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace segrec;

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> backend;
  std::optional<double> temperature;
  std::optional<int> instances;
  std::optional<int> tolerance;
};

config::PipelineConfig resolve_config(const CliOverrides& o) {
  config::PipelineConfig cfg =
      o.config_path.empty() ? config::default_config() : config::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.backend) {
    if (*o.backend != "http" && *o.backend != "mock") {
      throw ConfigError("--backend must be http or mock");
    }
    const auto kind = *o.backend == "http" ? config::BackendKind::kHttp
                                           : config::BackendKind::kMock;
    cfg.llm.backend = kind;
    cfg.embedding.backend = kind;
  }
  if (o.temperature) cfg.llm.temperatures = {*o.temperature};
  if (o.instances) cfg.llm.n_instances = *o.instances;
  if (o.tolerance) cfg.tolerance = *o.tolerance;
  return cfg;
}

report::Provenance provenance_of(const config::PipelineConfig& cfg) {
  return {config::config_hash(cfg), cfg.seed, kVersion};
}

json meta_json(const report::Provenance& p) {
  return json{{"config", p.config_hash}, {"seed", p.seed}, {"version", p.version}};
}

std::string fmt_temp(double t) { return io::fmt_exact(t); }

std::vector<corpus::Narrative> load_narratives(const config::PipelineConfig& cfg) {
  if (cfg.narrative_paths.empty()) {
    throw ConfigError("no narratives configured (key: narratives)");
  }
  std::vector<corpus::Narrative> out;
  for (const std::string& p : cfg.narrative_paths) {
    out.push_back(corpus::Narrative::from_file(p));
  }
  return out;
}

std::shared_ptr<llm::ChatBackend> make_chat_backend(const config::PipelineConfig& cfg) {
  if (cfg.llm.backend == config::BackendKind::kHttp) {
    llm::RetryPolicy retry;
    retry.max_attempts = cfg.llm.retry.max_attempts;
    retry.initial_delay = std::chrono::milliseconds(cfg.llm.retry.initial_delay_ms);
    return std::make_shared<llm::HttpChatBackend>(cfg.llm.base_url, cfg.llm.api_key_env, retry);
  }
  llm::MockChatConfig mock;
  mock.ground_truth = cfg.llm.mock_ground_truth;
  mock.auto_events = cfg.llm.mock_auto_events;
  mock.substitution_rate = cfg.llm.mock_substitution_rate;
  mock.segment_drop_rate = cfg.llm.mock_segment_drop_rate;
  mock.boundary_jitter_sd = cfg.llm.mock_boundary_jitter_sd;
  mock.seed = cfg.seed;
  return std::make_shared<llm::MockChatBackend>(mock);
}

std::unique_ptr<embed::EmbedBackend> make_embed_backend(const config::PipelineConfig& cfg) {
  if (cfg.embedding.backend == config::BackendKind::kHttp) {
    return std::make_unique<embed::HttpEmbedBackend>(cfg.embedding.base_url,
                                                     cfg.embedding.api_key_env);
  }
  return std::make_unique<embed::MockEmbedBackend>(cfg.embedding.mock_dim, cfg.seed);
}

json boundary_json(const report::Provenance& prov, const std::string& narrative_id,
                   const json& source, const align::ExtractionOutcome& outcome) {
  json j;
  j["_meta"] = meta_json(prov);
  j["narrative_id"] = narrative_id;
  j["source"] = source;
  j["boundaries"] = outcome.boundaries;
  j["coverage"] = outcome.coverage;
  j["flagged"] = outcome.flagged;
  j["reason"] = outcome.reason;
  return j;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  int n_narratives = 3;
  int tokens = 1500;
  int events = 12;
  int participants = 20;
  int raters = 11;
  double jitter = 1.0;
  double miss = 0.1;
  double false_alarm = 0.001;
};

int cmd_simulate(const config::PipelineConfig& cfg, const SimulateOptions& opt) {
  const fs::path sim_dir = fs::path(cfg.out_dir) / "sim";
  fs::create_directories(sim_dir);

  std::ostringstream annotations;
  annotations << "participant_id,narrative_id,boundaries\n";
  std::ostringstream ratings;
  ratings << "participant_id,narrative_id,mark_token_index,judged_boundary,confidence\n";
  std::ostringstream recalls;
  std::ostringstream gist;
  gist << "participant_id,narrative_id,event_index,gist_score\n";
  std::ostringstream gt_toml;

  for (int ni = 0; ni < opt.n_narratives; ++ni) {
    const std::string id = "sim" + std::to_string(ni + 1);
    const std::string text =
        sim::synthetic_narrative_text(opt.tokens, cfg.seed + static_cast<std::uint64_t>(ni));
    io::write_file_atomic(sim_dir / (id + ".txt"), text);
    const auto narr = corpus::Narrative::from_text(id, id, text);

    // Ground truth along sentence ends, like the mock backend derives it.
    llm::MockChatConfig derive;
    derive.auto_events = opt.events;
    const std::vector<int> gt = llm::MockChatBackend(derive).ground_truth_for(narr);
    gt_toml << id << " = [";
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (k) gt_toml << ", ";
      gt_toml << gt[k];
    }
    gt_toml << "]\n";

    // Synthetic segmenting cohort.
    sim::SyntheticCohortSpec spec;
    spec.ground_truth = gt;
    spec.n_participants = opt.participants;
    spec.jitter_sd = opt.jitter;
    spec.miss_rate = opt.miss;
    spec.false_alarm_rate = opt.false_alarm;
    spec.seed = stats::splitmix64(cfg.seed ^ io::fnv1a64(id));
    for (const auto& a : sim::simulate_cohort(spec, narr.token_count(), id)) {
      annotations << a.participant_id << ',' << id << ',';
      for (std::size_t k = 0; k < a.boundaries.size(); ++k) {
        if (k) annotations << ';';
        annotations << a.boundaries[k];
      }
      annotations << '\n';
    }

    // Ratings cohort: confident agreement at boundaries, noncommittal at the
    // non-boundary controls.
    metrics::NormativeBoundaries norm;
    norm.narrative_id = id;
    norm.indices = gt;
    norm.n = static_cast<int>(gt.size());
    const auto ends = corpus::detect_sentence_ends(narr.tokens);
    const auto non_bounds = metrics::select_non_boundaries(norm, ends, narr.token_count());
    stats::RngStream rater_rng(spec.seed, 0x52415445ULL);
    for (int r = 0; r < opt.raters; ++r) {
      char pid[16];
      std::snprintf(pid, sizeof(pid), "rater%02d", r);
      for (int b : gt) {
        const bool agree = rater_rng.uniform() < 0.9;
        const int conf = 6 + static_cast<int>(rater_rng.uniform_int(5));
        ratings << pid << ',' << id << ',' << b << ',' << (agree ? "true" : "false") << ','
                << conf << '\n';
      }
      for (int nb : non_bounds) {
        const bool thinks_boundary = rater_rng.uniform() < 0.5;
        const int conf = 1 + static_cast<int>(rater_rng.uniform_int(5));
        ratings << pid << ',' << id << ',' << nb << ','
                << (thinks_boundary ? "true" : "false") << ',' << conf << '\n';
      }
    }

    // Recall renditions per participant: retention ability drives both the
    // degraded text and the gist score a human rater would assign.
    std::vector<int> event_starts{0};
    for (int b : gt) event_starts.push_back(b);
    event_starts.push_back(narr.token_count());
    stats::RngStream recall_rng(spec.seed, 0x5245434cULL);
    for (int p = 0; p < opt.participants; ++p) {
      char pid[16];
      std::snprintf(pid, sizeof(pid), "sim%03d", p);
      const double ability = 0.35 + 0.6 * recall_rng.uniform();
      for (std::size_t e = 0; e + 1 < event_starts.size(); ++e) {
        const double retention =
            std::clamp(ability + 0.25 * (recall_rng.uniform() - 0.5), 0.05, 1.0);
        const std::string rendition =
            sim::degrade_text(narr.tokens, event_starts[e], event_starts[e + 1], retention,
                              spec.seed,
                              0x44454752ULL + 131 * static_cast<std::uint64_t>(p) + e);
        const int n_words = event_starts[e + 1] - event_starts[e];
        const int kept = static_cast<int>(corpus::tokenize(rendition).size());
        const double realized = n_words > 0 ? static_cast<double>(kept) / n_words : 0.0;
        if (!rendition.empty()) {
          json line;
          line["participant_id"] = pid;
          line["narrative_id"] = id;
          line["event_index"] = static_cast<int>(e);
          line["text"] = rendition;
          recalls << line.dump() << '\n';
        }
        const int score = static_cast<int>(std::clamp(
            std::lround(10.0 * realized + 1.5 * recall_rng.normal()), 0L, 10L));
        gist << pid << ',' << id << ',' << e << ',' << score << '\n';
      }
    }
  }

  io::write_file_atomic(sim_dir / "annotations.csv", annotations.str());
  io::write_file_atomic(sim_dir / "ratings.csv", ratings.str());
  io::write_file_atomic(sim_dir / "recalls.jsonl", recalls.str());
  io::write_file_atomic(sim_dir / "human_scores.csv", gist.str());

  // A config that reruns the whole pipeline against this dataset offline.
  std::ostringstream toml;
  toml << "narratives = [";
  for (int ni = 0; ni < opt.n_narratives; ++ni) {
    if (ni) toml << ", ";
    toml << '"' << (sim_dir / ("sim" + std::to_string(ni + 1) + ".txt")).string() << '"';
  }
  toml << "]\n";
  toml << "out_dir = \"" << cfg.out_dir << "\"\n";
  toml << "seed = " << cfg.seed << "\n";
  toml << "annotations = \"" << (sim_dir / "annotations.csv").string() << "\"\n";
  toml << "ratings = \"" << (sim_dir / "ratings.csv").string() << "\"\n";
  toml << "recalls = \"" << (sim_dir / "recalls.jsonl").string() << "\"\n";
  toml << "human_scores = \"" << (sim_dir / "human_scores.csv").string() << "\"\n";
  toml << "split_half_iterations = 2000\n";
  toml << "[llm]\nbackend = \"mock\"\nmodel_id = \"mock-model\"\n";
  toml << "mock_auto_events = " << opt.events << "\n";
  toml << "mock_boundary_jitter_sd = 1.5\n";
  toml << "[llm.ground_truth]\n" << gt_toml.str();
  toml << "[embedding]\nbackend = \"mock\"\nmodel_id = \"mock-embed\"\nmock_dim = 64\n";
  io::write_file_atomic(sim_dir / "config.toml", toml.str());

  std::cout << "simulate: wrote dataset under " << sim_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// segment / ingest-human
// ---------------------------------------------------------------------------

int cmd_segment(const config::PipelineConfig& cfg) {
  const auto narratives = load_narratives(cfg);
  const report::Provenance prov = provenance_of(cfg);
  const fs::path seg_dir = fs::path(cfg.out_dir) / "segmentation" / "llm";
  llm::Gateway gateway(make_chat_backend(cfg), fs::path(cfg.out_dir) / "cache" / "llm");
  const std::string kind = cfg.llm.backend == config::BackendKind::kMock ? "mock" : "llm";

  // No cache-hit column here: rerunning the same config must be byte-identical.
  report::CsvWriter summary(prov, {"narrative_id", "temperature", "instance_index",
                                   "n_boundaries", "coverage", "flagged"});
  for (const auto& narr : narratives) {
    for (double temp : cfg.llm.temperatures) {
      const auto records = gateway.run_instances(narr, cfg.llm.model_id, temp,
                                                 cfg.llm.n_instances, cfg.llm.parallelism);
      for (const auto& rec : records) {
        align::ExtractionOutcome outcome;
        try {
          outcome = align::extract_boundaries(narr, rec.raw_text);
        } catch (const ExtractionError& ex) {
          outcome.flagged = true;
          outcome.reason = ex.what();
        }
        json source;
        source["kind"] = kind;
        source["model_id"] = cfg.llm.model_id;
        source["temperature"] = temp;
        source["instance_index"] = rec.request.instance_index;
        char name[64];
        std::snprintf(name, sizeof(name), "t%s_i%02d.json", fmt_temp(temp).c_str(),
                      rec.request.instance_index);
        io::write_file_atomic(seg_dir / narr.id / name,
                              boundary_json(prov, narr.id, source, outcome).dump(2) + "\n");
        summary.add_row({narr.id, fmt_temp(temp), std::to_string(rec.request.instance_index),
                         std::to_string(outcome.boundaries.size()),
                         io::fmt_g9(outcome.coverage), outcome.flagged ? "true" : "false"});
      }
    }
  }
  summary.write(fs::path(cfg.out_dir) / "segmentation" / "segment_summary.csv");
  std::cout << "segment: wrote instance boundary files under " << seg_dir.string() << "\n";
  return 0;
}

int cmd_ingest_human(const config::PipelineConfig& cfg) {
  if (cfg.annotations_path.empty()) {
    throw ConfigError("ingest-human needs an annotations CSV (key: annotations)");
  }
  const auto narratives = load_narratives(cfg);
  const report::Provenance prov = provenance_of(cfg);
  const fs::path human_dir = fs::path(cfg.out_dir) / "segmentation" / "human";
  int total = 0;
  for (const auto& narr : narratives) {
    for (const auto& a : corpus::ingest_human_annotations(cfg.annotations_path, narr)) {
      align::ExtractionOutcome as_outcome;
      as_outcome.boundaries = a.boundaries;
      as_outcome.coverage = 1.0;
      json source;
      source["kind"] = "human";
      source["participant_id"] = a.participant_id;
      io::write_file_atomic(human_dir / narr.id / (a.participant_id + ".json"),
                            boundary_json(prov, narr.id, source, as_outcome).dump(2) + "\n");
      ++total;
    }
  }
  std::cout << "ingest-human: validated " << total << " annotations into "
            << human_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze-seg
// ---------------------------------------------------------------------------

struct LoadedSeries {
  // condition -> series list; conditions are "human" and "t<temperature>".
  std::map<std::string, std::vector<metrics::BoundarySeries>> by_condition;
};

LoadedSeries load_boundary_series(const config::PipelineConfig& cfg,
                                  const corpus::Narrative& narr) {
  LoadedSeries out;
  const fs::path base = fs::path(cfg.out_dir) / "segmentation";
  auto read_dir = [&](const fs::path& dir, auto condition_of, auto source_of) {
    if (!fs::exists(dir)) return;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const json j = json::parse(io::read_text_file(file));
      if (j.value("flagged", false)) continue;  // diagnostics stay in raw files
      metrics::BoundarySeries s;
      s.narrative_id = narr.id;
      s.source_id = source_of(j);
      s.values = metrics::to_series(j.at("boundaries").get<std::vector<int>>(),
                                    narr.token_count());
      out.by_condition[condition_of(j)].push_back(std::move(s));
    }
  };
  read_dir(
      base / "human" / narr.id, [](const json&) { return std::string("human"); },
      [](const json& j) { return j.at("source").value("participant_id", "?"); });
  read_dir(
      base / "llm" / narr.id,
      [](const json& j) {
        return "t" + io::fmt_exact(j.at("source").value("temperature", 0.0));
      },
      [](const json& j) {
        return "i" + std::to_string(j.at("source").value("instance_index", -1));
      });
  return out;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? io::fmt_g9(*v) : "NA";
}

int cmd_analyze_seg(const config::PipelineConfig& cfg) {
  const auto narratives = load_narratives(cfg);
  const report::Provenance prov = provenance_of(cfg);
  const fs::path analysis_dir = fs::path(cfg.out_dir) / "analysis";
  const fs::path figures_dir = fs::path(cfg.out_dir) / "figures";

  report::CsvWriter counts(prov, {"narrative_id", "condition", "source_id", "n_boundaries",
                                  "per_1000_words"});
  report::CsvWriter loo(prov, {"narrative_id", "condition", "source_id", "agreement"});
  report::CsvWriter cross(prov,
                          {"narrative_id", "participant_id", "llm_condition", "agreement"});
  report::CsvWriter shared(prov, {"narrative_id", "llm_condition", "token_index", "kind",
                                  "human_proportion"});
  report::CsvWriter consistency(prov,
                                {"narrative_id", "llm_condition", "iteration",
                                 "prop_human_human", "prop_human_llm", "n_events_human",
                                 "n_events_llm"});

  // For the figures: mean +- sd per condition pooled over narratives.
  std::map<std::string, std::vector<double>> counts_by_condition;
  std::map<std::string, std::vector<double>> loo_by_condition;
  std::map<std::string, std::vector<double>> consist_by_condition;

  for (const auto& narr : narratives) {
    const LoadedSeries loaded = load_boundary_series(cfg, narr);

    for (const auto& [condition, group] : loaded.by_condition) {
      for (const auto& s : group) {
        const int n = static_cast<int>(s.values.sum());
        const double per1000 = metrics::boundaries_per_1000(n, narr.token_count());
        counts.add_row({narr.id, condition, s.source_id, std::to_string(n),
                        io::fmt_g9(per1000)});
        counts_by_condition[condition].push_back(per1000);
      }
      if (group.size() >= 2) {
        for (const auto& score : metrics::loo_agreement(group)) {
          loo.add_row({narr.id, condition, score.source_id, opt_cell(score.value)});
          if (score.value) loo_by_condition[condition].push_back(*score.value);
        }
      }
    }

    const auto humans_it = loaded.by_condition.find("human");
    for (const auto& [condition, group] : loaded.by_condition) {
      if (condition == "human" || group.empty()) continue;
      if (humans_it == loaded.by_condition.end()) continue;
      metrics::MeanSeries llm_mean;
      llm_mean.narrative_id = narr.id;
      llm_mean.group_id = condition;
      llm_mean.values = metrics::mean_series(group);
      llm_mean.group_size = static_cast<int>(group.size());
      for (const auto& human : humans_it->second) {
        cross.add_row({narr.id, human.source_id, condition,
                       opt_cell(metrics::cross_agreement(human, llm_mean))});
      }
      for (const auto& c :
           metrics::classify_shared_distinct(humans_it->second, group, cfg.tolerance)) {
        shared.add_row({narr.id, condition, std::to_string(c.token_index),
                        c.kind == metrics::BoundaryKind::kShared ? "shared" : "distinct",
                        io::fmt_g9(c.human_proportion)});
      }
      if (static_cast<int>(humans_it->second.size()) >= 2 * cfg.group_size &&
          static_cast<int>(group.size()) >= cfg.group_size) {
        // One seed per narrative: the human splits repeat across conditions,
        // so prop_human_human is a single reference column.
        const std::uint64_t seed = stats::splitmix64(cfg.seed ^ io::fnv1a64(narr.id));
        const auto iterations = metrics::between_group_consistency(
            humans_it->second, group, cfg.group_size, cfg.consistency_iterations, seed,
            cfg.tolerance);
        for (const auto& it : iterations) {
          consistency.add_row({narr.id, condition, std::to_string(it.iteration),
                               opt_cell(it.prop_human_human), opt_cell(it.prop_human_llm),
                               std::to_string(it.n_events_human),
                               std::to_string(it.n_events_llm)});
          if (it.prop_human_human) {
            consist_by_condition["human"].push_back(*it.prop_human_human);
          }
          if (it.prop_human_llm) consist_by_condition[condition].push_back(*it.prop_human_llm);
        }
      }
    }

    // Normative boundaries from the temperature-0 instances.
    const auto t0 = loaded.by_condition.find("t0");
    if (t0 != loaded.by_condition.end() && !t0->second.empty()) {
      const auto norm = metrics::normative_boundaries(t0->second);
      const auto ends = corpus::detect_sentence_ends(narr.tokens);
      std::vector<std::pair<int, int>> skipped;
      const auto non_bounds =
          metrics::select_non_boundaries(norm, ends, narr.token_count(), &skipped);
      json j;
      j["_meta"] = meta_json(prov);
      j["narrative_id"] = narr.id;
      j["n"] = norm.n;
      j["indices"] = norm.indices;
      j["non_boundary_indices"] = non_bounds;
      j["flagged"] = norm.flagged;
      j["spans_without_control"] = skipped.size();
      io::write_file_atomic(analysis_dir / ("normative_" + narr.id + ".json"),
                            j.dump(2) + "\n");
    }
  }

  counts.write(analysis_dir / "counts.csv");
  loo.write(analysis_dir / "agreement_loo.csv");
  cross.write(analysis_dir / "agreement_cross.csv");
  shared.write(analysis_dir / "shared_distinct.csv");
  consistency.write(analysis_dir / "consistency.csv");

  // Ratings analysis needs the normative marks for every rated narrative.
  if (!cfg.ratings_path.empty()) {
    std::map<std::pair<std::string, int>, bool> kinds;
    std::vector<corpus::RatingRecord> records;
    for (const auto& narr : narratives) {
      const fs::path norm_path = analysis_dir / ("normative_" + narr.id + ".json");
      if (!fs::exists(norm_path)) continue;
      const json j = json::parse(io::read_text_file(norm_path));
      for (int b : j.at("indices").get<std::vector<int>>()) kinds[{narr.id, b}] = true;
      for (int nb : j.at("non_boundary_indices").get<std::vector<int>>()) {
        kinds[{narr.id, nb}] = false;
      }
      const auto recs = corpus::ingest_ratings(cfg.ratings_path, narr);
      records.insert(records.end(), recs.begin(), recs.end());
    }
    const auto mode = cfg.rating_scale == "ninths"
                          ? metrics::RatingScaleMode::kConfidenceNinths
                          : metrics::RatingScaleMode::kConfidenceTenths;
    const auto summary = metrics::rating_summary(records, kinds, mode);
    report::CsvWriter rating_csv(prov, {"participant_id", "boundary_mean",
                                        "non_boundary_mean"});
    for (const auto& row : summary.per_participant) {
      rating_csv.add_row({row.participant_id, opt_cell(row.boundary_mean),
                          opt_cell(row.non_boundary_mean)});
    }
    rating_csv.write(analysis_dir / "rating_means.csv");
    json tests;
    tests["_meta"] = meta_json(prov);
    auto test_json = [](const std::optional<stats::TTestResult>& t) {
      if (!t) return json{{"degenerate", true}};
      return json{{"t", t->t}, {"df", t->df}, {"p", t->p}};
    };
    tests["boundary_vs_zero"] = test_json(summary.t_boundary_vs_zero);
    tests["non_boundary_vs_zero"] = test_json(summary.t_non_boundary_vs_zero);
    tests["between_conditions_welch"] = test_json(summary.t_between_conditions);
    tests["n_boundary_participants"] = summary.n_boundary_participants;
    tests["n_non_boundary_participants"] = summary.n_non_boundary_participants;
    io::write_file_atomic(analysis_dir / "rating_tests.json", tests.dump(2) + "\n");
  }

  // Figures: counts, agreement, and consistency bars per condition.
  auto bars_of = [](const std::map<std::string, std::vector<double>>& groups) {
    std::vector<report::BarGroup> bars;
    for (const auto& [label, values] : groups) {
      if (values.empty()) continue;
      report::BarGroup b;
      b.label = label;
      b.mean = stats::mean(values);
      b.whisker = values.size() >= 2 ? stats::stddev(values) : 0.0;
      bars.push_back(std::move(b));
    }
    return bars;
  };
  if (!counts_by_condition.empty()) {
    report::write_bar_chart_svg(figures_dir / "boundary_counts.svg", prov,
                                "Identified event boundaries", bars_of(counts_by_condition),
                                "boundaries per 1000 words");
  }
  if (!loo_by_condition.empty()) {
    report::write_bar_chart_svg(figures_dir / "agreement.svg", prov,
                                "Segmentation agreement index", bars_of(loo_by_condition),
                                "leave-one-out agreement");
  }
  if (!consist_by_condition.empty()) {
    report::write_bar_chart_svg(figures_dir / "consistency.svg", prov,
                                "Between-group consistency", bars_of(consist_by_condition),
                                "proportion of matching boundaries");
  }

  std::cout << "analyze-seg: wrote tables under " << analysis_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

std::vector<embed::SegmentRecord> narrative_segments(const corpus::Narrative& narr,
                                                     const std::vector<int>& boundaries) {
  std::vector<int> starts{0};
  for (int b : boundaries) starts.push_back(b);
  starts.push_back(narr.token_count());
  std::vector<embed::SegmentRecord> segs;
  for (std::size_t e = 0; e + 1 < starts.size(); ++e) {
    std::string text;
    for (int i = starts[e]; i < starts[e + 1]; ++i) {
      if (!text.empty()) text += ' ';
      text += narr.tokens[static_cast<std::size_t>(i)].surface;
    }
    if (text.empty()) continue;
    segs.push_back({narr.id, static_cast<int>(e), std::move(text)});
  }
  return segs;
}

int cmd_embed(const config::PipelineConfig& cfg) {
  const auto narratives = load_narratives(cfg);
  const fs::path analysis_dir = fs::path(cfg.out_dir) / "analysis";
  const fs::path recall_dir = fs::path(cfg.out_dir) / "recall";
  const auto backend = make_embed_backend(cfg);
  const fs::path cache = fs::path(cfg.out_dir) / "cache" / "embed";

  std::vector<embed::SegmentRecord> segments;
  for (const auto& narr : narratives) {
    const fs::path norm_path = analysis_dir / ("normative_" + narr.id + ".json");
    if (!fs::exists(norm_path)) {
      throw ConfigError("embed: missing " + norm_path.string() + "; run analyze-seg first");
    }
    const json j = json::parse(io::read_text_file(norm_path));
    const auto segs = narrative_segments(narr, j.at("indices").get<std::vector<int>>());
    segments.insert(segments.end(), segs.begin(), segs.end());
  }

  if (!cfg.recalls_path.empty()) {
    const std::string content = io::read_text_file(cfg.recalls_path);
    std::size_t line_no = 0;
    for (const std::string& line : io::split(content, '\n')) {
      ++line_no;
      const std::string trimmed = io::trim(line);
      if (trimmed.empty()) continue;
      json j;
      try {
        j = json::parse(trimmed);
      } catch (const json::exception& ex) {
        throw ParseError(cfg.recalls_path + ": line " + std::to_string(line_no) + ": " +
                         ex.what());
      }
      embed::SegmentRecord seg;
      seg.owner_id = j.at("participant_id").get<std::string>() + "::" +
                     j.at("narrative_id").get<std::string>();
      seg.event_index = j.at("event_index").get<int>();
      seg.text = j.at("text").get<std::string>();
      segments.push_back(std::move(seg));
    }
  }

  const auto vectors = embed::embed_texts(segments, cfg.embedding.model_id, *backend, cache);
  embed::export_vectors(recall_dir / ("vectors_" + cfg.embedding.model_id + ".jsonl"),
                        vectors);
  std::cout << "embed: wrote " << vectors.size() << " vectors for model "
            << cfg.embedding.model_id << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// score-recall
// ---------------------------------------------------------------------------

struct VectorStore {
  // narrative id -> event vectors, sorted by event index.
  std::map<std::string, std::vector<embed::EmbeddingVector>> narratives;
  // narrative id -> participant -> recall vectors.
  std::map<std::string, std::map<std::string, std::vector<embed::EmbeddingVector>>> recalls;
};

VectorStore load_vector_store(const config::PipelineConfig& cfg,
                              const std::vector<corpus::Narrative>& narratives) {
  const fs::path path = fs::path(cfg.out_dir) / "recall" /
                        ("vectors_" + cfg.embedding.model_id + ".jsonl");
  if (!fs::exists(path)) {
    throw ConfigError("score-recall: missing " + path.string() + "; run embed first");
  }
  std::set<std::string> narrative_ids;
  for (const auto& n : narratives) narrative_ids.insert(n.id);

  VectorStore store;
  for (auto& v : embed::import_vectors(path)) {
    const auto sep = v.owner_id.find("::");
    if (sep == std::string::npos) {
      if (!narrative_ids.count(v.owner_id)) {
        throw IntegrityError("vector owner '" + v.owner_id +
                             "' is not a configured narrative");
      }
      store.narratives[v.owner_id].push_back(std::move(v));
    } else {
      const std::string participant = v.owner_id.substr(0, sep);
      const std::string narrative = v.owner_id.substr(sep + 2);
      store.recalls[narrative][participant].push_back(std::move(v));
    }
  }
  auto by_event = [](std::vector<embed::EmbeddingVector>& vs) {
    std::sort(vs.begin(), vs.end(),
              [](const auto& a, const auto& b) { return a.event_index < b.event_index; });
  };
  for (auto& [id, vs] : store.narratives) by_event(vs);
  for (auto& [id, participants] : store.recalls) {
    for (auto& [pid, vs] : participants) by_event(vs);
  }
  return store;
}

int cmd_score_recall(const config::PipelineConfig& cfg) {
  const auto narratives = load_narratives(cfg);
  const report::Provenance prov = provenance_of(cfg);
  const fs::path recall_dir = fs::path(cfg.out_dir) / "recall";
  const fs::path figures_dir = fs::path(cfg.out_dir) / "figures";
  const VectorStore store = load_vector_store(cfg, narratives);
  const auto baseline_mode = cfg.baseline_mode == "pool" ? recall::BaselineMode::kPool
                                                         : recall::BaselineMode::kAverage;

  report::CsvWriter inter(prov, {"narrative_id", "participant_id", "model_id", "diag_mean",
                                 "rev_diag_mean", "n_pairs"});
  report::CsvWriter events(prov, {"participant_id", "narrative_id", "model_id",
                                  "event_index", "score"});
  report::CsvWriter means(prov, {"participant_id", "narrative_id", "model_id", "mean_score",
                                 "baseline_mean", "mean_score_z", "baseline_z"});

  auto write_matrix_grid = [&](const fs::path& path,
                               const Eigen::Ref<const Eigen::MatrixXd>& m) {
    std::vector<std::string> header;
    for (Eigen::Index c = 0; c < m.cols(); ++c) header.push_back("c" + std::to_string(c));
    report::CsvWriter grid(prov, header);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<std::string> row;
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(io::fmt_g9(m(r, c)));
      grid.add_row(std::move(row));
    }
    grid.write(path);
  };

  struct MeanRow {
    std::string participant;
    std::string narrative;
    double matched = 0.0;
    double baseline = 0.0;
    std::vector<double> per_event;
  };
  std::vector<MeanRow> mean_rows;

  for (const auto& [narr_id, participants] : store.recalls) {
    const auto narr_vecs_it = store.narratives.find(narr_id);
    if (narr_vecs_it == store.narratives.end()) {
      throw IntegrityError("no narrative vectors for '" + narr_id + "'");
    }
    const auto& narr_vecs = narr_vecs_it->second;
    const int n_events = static_cast<int>(narr_vecs.size());

    if (participants.size() >= 2) {
      std::vector<std::string> excluded;
      for (const auto& s : recall::intersubject_agreement(participants, n_events, &excluded)) {
        inter.add_row({narr_id, s.participant_id, cfg.embedding.model_id,
                       io::fmt_g9(s.diag_mean), io::fmt_g9(s.rev_diag_mean),
                       std::to_string(s.n_pairs)});
      }
      // Mean recall x recall matrix for the heatmap.
      Eigen::MatrixXd mean_matrix = Eigen::MatrixXd::Zero(n_events, n_events);
      int n_matrices = 0;
      for (const auto& [p, pv] : participants) {
        if (pv.size() < 2) continue;
        for (const auto& [q, qv] : participants) {
          if (p == q || qv.size() < 2) continue;
          mean_matrix += recall::resize_square(recall::similarity_matrix(pv, qv), n_events);
          ++n_matrices;
        }
      }
      if (n_matrices > 0) {
        mean_matrix /= n_matrices;
        report::write_heatmap_svg(figures_dir / ("intersubject_" + narr_id + ".svg"), prov,
                                  "Recall x recall similarity: " + narr_id, mean_matrix);
        write_matrix_grid(recall_dir / "matrices" / ("intersubject_" + narr_id + ".csv"),
                          mean_matrix);
      }
    }

    std::vector<std::vector<embed::EmbeddingVector>> others;
    for (const auto& [other_id, other_vecs] : store.narratives) {
      if (other_id != narr_id) others.push_back(other_vecs);
    }
    Eigen::MatrixXd mean_recall_matrix = Eigen::MatrixXd::Zero(n_events, n_events);
    for (const auto& [pid, recall_vecs] : participants) {
      mean_recall_matrix +=
          recall::resize_square(recall::similarity_matrix(narr_vecs, recall_vecs), n_events);
      const auto report = recall::event_recall_scores(narr_vecs, recall_vecs);
      for (std::size_t e = 0; e < report.per_event_scores.size(); ++e) {
        events.add_row({pid, narr_id, cfg.embedding.model_id, std::to_string(e),
                        io::fmt_g9(report.per_event_scores[e])});
      }
      MeanRow row;
      row.participant = pid;
      row.narrative = narr_id;
      row.matched = report.mean_score;
      row.baseline =
          others.empty() ? 0.0 : recall::baseline_score(recall_vecs, others, baseline_mode);
      row.per_event = report.per_event_scores;
      mean_rows.push_back(std::move(row));
    }
    if (!participants.empty()) {
      mean_recall_matrix /= static_cast<double>(participants.size());
      write_matrix_grid(recall_dir / "matrices" / ("narrative_recall_" + narr_id + ".csv"),
                        mean_recall_matrix);
      report::write_heatmap_svg(figures_dir / ("narrative_recall_" + narr_id + ".svg"), prov,
                                "Narrative x recall similarity: " + narr_id,
                                mean_recall_matrix);
    }
  }

  // z-transform matched and baseline means within this model's score group.
  std::vector<double> pooled;
  for (const auto& r : mean_rows) {
    pooled.push_back(r.matched);
    pooled.push_back(r.baseline);
  }
  std::vector<double> pooled_z;
  if (pooled.size() >= 2) {
    try {
      pooled_z = stats::zscore(pooled);
    } catch (const DomainError&) {
      pooled_z.clear();  // constant scores: z columns stay NA
    }
  }
  for (std::size_t i = 0; i < mean_rows.size(); ++i) {
    const auto& r = mean_rows[i];
    means.add_row({r.participant, r.narrative, cfg.embedding.model_id, io::fmt_g9(r.matched),
                   io::fmt_g9(r.baseline),
                   pooled_z.empty() ? "NA" : io::fmt_g9(pooled_z[2 * i]),
                   pooled_z.empty() ? "NA" : io::fmt_g9(pooled_z[2 * i + 1])});
    json rj;
    rj["_meta"] = meta_json(prov);
    rj["participant_id"] = r.participant;
    rj["narrative_id"] = r.narrative;
    rj["model_id"] = cfg.embedding.model_id;
    rj["per_event_scores"] = r.per_event;
    rj["mean_score"] = r.matched;
    rj["baseline_mean"] = r.baseline;
    if (!pooled_z.empty()) {
      rj["mean_score_z"] = pooled_z[2 * i];
      rj["baseline_z"] = pooled_z[2 * i + 1];
    }
    io::write_file_atomic(
        recall_dir / "reports" / (r.participant + "__" + r.narrative + ".json"),
        rj.dump(2) + "\n");
  }

  inter.write(recall_dir / "intersubject.csv");
  events.write(recall_dir / "recall_scores.csv");
  means.write(recall_dir / "recall_means.csv");

  if (!mean_rows.empty()) {
    std::vector<double> matched, baseline;
    for (const auto& r : mean_rows) {
      matched.push_back(r.matched);
      baseline.push_back(r.baseline);
    }
    std::vector<report::BarGroup> bars(2);
    bars[0] = {"recall", stats::mean(matched),
               matched.size() >= 2 ? stats::stddev(matched) : 0.0};
    bars[1] = {"baseline", stats::mean(baseline),
               baseline.size() >= 2 ? stats::stddev(baseline) : 0.0};
    report::write_bar_chart_svg(figures_dir / "recall_vs_baseline.svg", prov,
                                "Recall scores vs non-corresponding baseline", bars,
                                "mean event similarity");
  }

  std::cout << "score-recall: wrote recall tables under " << recall_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const config::PipelineConfig& cfg) {
  if (cfg.human_scores_path.empty()) {
    throw ConfigError("validate needs a human scores CSV (key: human_scores)");
  }
  const report::Provenance prov = provenance_of(cfg);
  const fs::path recall_dir = fs::path(cfg.out_dir) / "recall";
  const fs::path scores_path = recall_dir / "recall_scores.csv";
  if (!fs::exists(scores_path)) {
    throw ConfigError("validate: missing " + scores_path.string() +
                      "; run score-recall first");
  }

  // Auto per-event scores, keyed by (participant, narrative, event).
  std::map<std::tuple<std::string, std::string, int>, double> auto_scores;
  {
    const auto lines = io::split(io::read_text_file(scores_path), '\n');
    for (std::size_t i = 2; i < lines.size(); ++i) {  // provenance + header
      if (io::trim(lines[i]).empty()) continue;
      const auto f = io::split_csv_row(lines[i]);
      auto_scores[{f[0], f[1], std::stoi(f[3])}] = std::stod(f[4]);
    }
  }

  std::vector<double> auto_joined, human_joined;
  std::vector<std::string> participants;
  {
    const auto lines = io::split(io::read_text_file(cfg.human_scores_path), '\n');
    if (lines.empty() ||
        io::trim(lines[0]) != "participant_id,narrative_id,event_index,gist_score") {
      throw ParseError(cfg.human_scores_path +
                       ": expected header participant_id,narrative_id,event_index,gist_score");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (io::trim(lines[i]).empty()) continue;
      const auto f = io::split_csv_row(lines[i]);
      if (f.size() != 4) {
        throw ParseError(cfg.human_scores_path + ": row " + std::to_string(i + 1) +
                         ": expected 4 fields");
      }
      const int gist = std::stoi(f[3]);
      if (gist < 0 || gist > 10) {
        throw ValidationError("gist_score " + std::to_string(gist) + " outside [0,10]");
      }
      const auto it = auto_scores.find({f[0], f[1], std::stoi(f[2])});
      if (it == auto_scores.end()) continue;  // event not scored automatically
      auto_joined.push_back(it->second);
      human_joined.push_back(static_cast<double>(gist));
      participants.push_back(f[0]);
    }
  }
  if (auto_joined.size() < 8) {
    throw ValidationError("validate: too few joined (participant, event) scores");
  }

  const auto sh = recall::split_half(auto_joined, human_joined, participants,
                                     cfg.split_half_iterations,
                                     stats::splitmix64(cfg.seed ^ 0x53504c49ULL));
  json j;
  j["_meta"] = meta_json(prov);
  j["model_id"] = cfg.embedding.model_id;
  j["rho_mean"] = sh.rho_mean;
  j["rho_sb"] = sh.rho_sb;
  j["p_value"] = sh.p_value;
  j["p_mean_vs_null"] = sh.p_mean_vs_null;
  j["iterations"] = sh.iterations;
  j["null_mean"] = sh.null_mean;
  j["null_sd"] = sh.null_sd;
  j["n_undefined"] = sh.n_undefined;
  j["dropped_participant"] = sh.dropped_participant;
  io::write_file_atomic(recall_dir / "splithalf.json", j.dump(2) + "\n");

  const auto reg = recall::standardized_regression(stats::zscore(auto_joined),
                                                   stats::zscore(human_joined));
  report::CsvWriter reg_csv(prov, {"model_id", "beta", "t", "p", "n", "exact_fit"});
  reg_csv.add_row({cfg.embedding.model_id, io::fmt_g9(reg.beta),
                   reg.t_statistic ? io::fmt_g9(*reg.t_statistic) : "NA",
                   reg.p_value ? io::fmt_g9(*reg.p_value) : "NA", std::to_string(reg.n),
                   reg.exact_fit ? "true" : "false"});
  reg_csv.write(recall_dir / "regression.csv");

  std::cout << "validate: rho_sb=" << io::fmt_g9(sh.rho_sb) << " p=" << io::fmt_g9(sh.p_value)
            << " beta=" << io::fmt_g9(reg.beta) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const config::PipelineConfig& cfg) {
  const report::Provenance prov = provenance_of(cfg);
  const fs::path out = cfg.out_dir;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "manifest.json") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  json manifest;
  manifest["_meta"] = meta_json(prov);
  auto listing = json::array();
  for (const auto& f : files) {
    json item;
    item["path"] = fs::relative(f, out).generic_string();
    item["sha256"] = io::sha256_hex(io::read_text_file(f));
    listing.push_back(std::move(item));
  }
  manifest["files"] = listing;
  io::write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "report: manifest covers " << files.size() << " files\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Narrative event segmentation and recall scoring pipeline"};
  app.require_subcommand(1);

  CliOverrides overrides;
  app.add_option("--config", overrides.config_path, "TOML config file");
  app.add_option("--seed", overrides.seed, "Master seed override");
  app.add_option("--out", overrides.out_dir, "Output directory override");
  app.add_option("--backend", overrides.backend, "Backend override: http|mock");
  app.add_option("--temperature", overrides.temperature,
                 "Single temperature override for the LLM condition list");
  app.add_option("--instances", overrides.instances, "Instance count override");
  app.add_option("--tolerance", overrides.tolerance, "Boundary match tolerance (+- tokens)");

  SimulateOptions sim_opt;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim_cmd->fallthrough();
  sim_cmd->add_option("--narratives", sim_opt.n_narratives, "Number of narratives");
  sim_cmd->add_option("--tokens", sim_opt.tokens, "Tokens per narrative");
  sim_cmd->add_option("--events", sim_opt.events, "Target events per narrative");
  sim_cmd->add_option("--participants", sim_opt.participants, "Cohort size");
  sim_cmd->add_option("--raters", sim_opt.raters, "Rating cohort size");
  sim_cmd->add_option("--jitter", sim_opt.jitter, "Boundary jitter sd in tokens");
  sim_cmd->add_option("--miss", sim_opt.miss, "Boundary miss rate");
  sim_cmd->add_option("--false-alarm", sim_opt.false_alarm, "Per-token false alarm rate");

  auto* segment_cmd = app.add_subcommand("segment", "Segment narratives with the chat backend");
  segment_cmd->fallthrough();
  auto* ingest_cmd = app.add_subcommand("ingest-human", "Ingest human annotation CSVs");
  ingest_cmd->fallthrough();
  auto* analyze_cmd = app.add_subcommand("analyze-seg", "Segmentation statistics and figures");
  analyze_cmd->fallthrough();
  auto* embed_cmd = app.add_subcommand("embed", "Embed narrative events and recall segments");
  embed_cmd->fallthrough();
  auto* score_cmd = app.add_subcommand("score-recall", "Intersubject and recall scoring");
  score_cmd->fallthrough();
  auto* validate_cmd = app.add_subcommand("validate", "Split-half and regression validation");
  validate_cmd->fallthrough();
  auto* report_cmd = app.add_subcommand("report", "Write the output manifest");
  report_cmd->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const config::PipelineConfig cfg = resolve_config(overrides);
    if (sim_cmd->parsed()) return cmd_simulate(cfg, sim_opt);
    if (segment_cmd->parsed()) return cmd_segment(cfg);
    if (ingest_cmd->parsed()) return cmd_ingest_human(cfg);
    if (analyze_cmd->parsed()) return cmd_analyze_seg(cfg);
    if (embed_cmd->parsed()) return cmd_embed(cfg);
    if (score_cmd->parsed()) return cmd_score_recall(cfg);
    if (validate_cmd->parsed()) return cmd_validate(cfg);
    if (report_cmd->parsed()) return cmd_report(cfg);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
