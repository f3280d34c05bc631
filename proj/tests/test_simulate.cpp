#include <doctest.h>

#include "segrec/corpus.hpp"
#include "segrec/simulate.hpp"
#include "segrec/stats.hpp"

using namespace segrec;

TEST_CASE("simulate_cohort") {
  sim::SyntheticCohortSpec spec;
  spec.ground_truth = {10, 25, 40};
  spec.n_participants = 6;
  spec.seed = 5;

  SUBCASE("no noise reproduces the ground truth for everyone") {
    const auto cohort = sim::simulate_cohort(spec, 60, "n");
    REQUIRE(cohort.size() == 6);
    for (const auto& a : cohort) {
      CHECK(a.boundaries == spec.ground_truth);
      CHECK(a.narrative_id == "n");
    }
  }
  SUBCASE("miss rate 1 empties every participant") {
    auto s = spec;
    s.miss_rate = 1.0;
    for (const auto& a : sim::simulate_cohort(s, 60, "n")) {
      CHECK(a.boundaries.empty());
    }
  }
  SUBCASE("fixed seed gives an identical cohort") {
    auto s = spec;
    s.jitter_sd = 2.0;
    s.miss_rate = 0.2;
    s.false_alarm_rate = 0.01;
    const auto a = sim::simulate_cohort(s, 60, "n");
    const auto b = sim::simulate_cohort(s, 60, "n");
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].boundaries == b[i].boundaries);
    }
  }
  SUBCASE("jittered indices stay in range and stay sorted unique") {
    auto s = spec;
    s.jitter_sd = 8.0;
    s.false_alarm_rate = 0.05;
    for (const auto& a : sim::simulate_cohort(s, 60, "n")) {
      for (std::size_t i = 0; i < a.boundaries.size(); ++i) {
        CHECK(a.boundaries[i] > 0);
        CHECK(a.boundaries[i] < 60);
        if (i > 0) CHECK(a.boundaries[i] > a.boundaries[i - 1]);
      }
    }
  }
}

TEST_CASE("simulate_recall_vectors") {
  std::vector<embed::EmbeddingVector> narr;
  stats::RngStream rng(1, 1);
  for (int i = 0; i < 5; ++i) {
    embed::EmbeddingVector v;
    v.owner_id = "n";
    v.event_index = i;
    v.model_id = "m";
    v.values.resize(6);
    for (int d = 0; d < 6; ++d) v.values[d] = rng.normal();
    narr.push_back(std::move(v));
  }
  SUBCASE("zero noise, original order is an identical copy") {
    const auto rec = sim::simulate_recall_vectors(narr, 0.0, sim::RecallOrder::kOriginal, 3, "p");
    REQUIRE(rec.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(rec[static_cast<std::size_t>(i)].values == narr[static_cast<std::size_t>(i)].values);
      CHECK(rec[static_cast<std::size_t>(i)].owner_id == "p");
      CHECK(rec[static_cast<std::size_t>(i)].event_index == i);
    }
  }
  SUBCASE("reversed order") {
    const auto rec = sim::simulate_recall_vectors(narr, 0.0, sim::RecallOrder::kReversed, 3, "p");
    for (int i = 0; i < 5; ++i) {
      CHECK(rec[static_cast<std::size_t>(i)].values ==
            narr[static_cast<std::size_t>(4 - i)].values);
    }
  }
  SUBCASE("seeded noise is reproducible") {
    const auto a = sim::simulate_recall_vectors(narr, 0.4, sim::RecallOrder::kPermuted, 9, "p");
    const auto b = sim::simulate_recall_vectors(narr, 0.4, sim::RecallOrder::kPermuted, 9, "p");
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
  }
}

TEST_CASE("synthetic_narrative_text") {
  const std::string text = sim::synthetic_narrative_text(300, 11);
  const auto toks = corpus::tokenize(text);
  CHECK(toks.size() == 300);
  CHECK_FALSE(corpus::detect_sentence_ends(toks).empty());
  CHECK(text == sim::synthetic_narrative_text(300, 11));
  CHECK(text != sim::synthetic_narrative_text(300, 12));
}

TEST_CASE("degrade_text") {
  const auto toks = corpus::tokenize("alpha beta gamma delta epsilon.");
  CHECK(sim::degrade_text(toks, 0, 5, 1.0, 1, 1) == "alpha beta gamma delta epsilon.");
  CHECK(sim::degrade_text(toks, 1, 3, 1.0, 1, 1) == "beta gamma");
  CHECK(sim::degrade_text(toks, 0, 5, 0.0, 1, 1).empty());
  CHECK(sim::degrade_text(toks, 0, 5, 0.6, 4, 2) == sim::degrade_text(toks, 0, 5, 0.6, 4, 2));
}
