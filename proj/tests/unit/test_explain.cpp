#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fedmol/explain.hpp"
#include "support.hpp"

using namespace fedmol;

namespace {

DatasetManifest manifest_of(std::vector<std::string> cats) {
  DatasetManifest m;
  for (auto& c : cats) m.feature_groups.push_back({c, FeatureKind::categorical});
  return m;
}

// `n` records with `k` label clusters; group "leak" equals the label, the
// other groups are uniform noise over five values.
struct LeakFixture {
  DatasetManifest manifest;
  std::vector<MoleculeRecord> records;
  ClusterAssignment assignment;
};

LeakFixture leak_fixture(std::uint64_t seed, std::size_t n = 200, int k = 4, bool leak = true) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> lab(0, k - 1), noise(0, 4);
  LeakFixture f;
  f.manifest = manifest_of({"scaffold", "noise_a", "noise_b", leak ? "leak" : "noise_c"});
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const int l = lab(rng);
    labels.push_back(l);
    std::vector<MetaValue> meta{"s" + std::to_string(noise(rng)), "a" + std::to_string(noise(rng)),
                                "b" + std::to_string(noise(rng)),
                                leak ? "L" + std::to_string(l) : "c" + std::to_string(noise(rng))};
    f.records.push_back(testing::record("m" + std::to_string(i), {}, 8, "scaf", meta));
  }
  f.assignment = assignment_from_ids(labels, Method::random);
  return f;
}

double importance_of(const FeatureGroupImportance& imp, const std::string& g) {
  for (const auto& [name, v] : imp)
    if (name == g) return v;
  return -1.0;
}

}  // namespace

TEST_CASE("metadata encoding") {
  DatasetManifest m = manifest_of({"cat", "allna"});
  m.feature_groups.push_back({"num", FeatureKind::numeric});
  std::vector<MoleculeRecord> recs{
      testing::record("a", {}, 8, "s", {"b", MetaValue{}, "2"}),
      testing::record("b", {}, 8, "s", {"a", MetaValue{}, MetaValue{}}),
      testing::record("c", {}, 8, "s", {"b", MetaValue{}, "4"}),
  };
  const auto enc = encode_metadata(m, recs);
  CHECK(enc.groups == std::vector<std::string>{"scaffold", "cat", "allna", "num"});
  CHECK(enc.column_names ==
        std::vector<std::string>{"scaffold=s", "cat=a", "cat=b", "allna=NA", "num", "num=NA"});
  CHECK(enc.design(0, 2) == 1.0);
  CHECK(enc.design(1, 1) == 1.0);
  CHECK(enc.design(1, 4) == 1.0);  // min - 1
  CHECK(enc.design(1, 5) == 1.0);
  CHECK(enc.design(2, 4) == 4.0);
}

TEST_CASE("random forest fits separable data deterministically") {
  std::mt19937_64 rng(3);
  Matrix x = testing::random_points(rng, 120, 3);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.push_back(x(i, 1) > 0.2 ? 1 : 0);
  RandomForestConfig cfg;
  cfg.n_trees = 25;
  cfg.seed = 4;
  RandomForest a, b;
  a.fit(x, y, cfg);
  cfg.parallel = false;
  b.fit(x, y, cfg);
  CHECK(a.tree_count() == 25);
  CHECK(a.predict(x) == y);
  CHECK(a.feature_importances() == b.feature_importances());
  const auto& imp = a.feature_importances();
  CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::max_element(imp.begin(), imp.end()) - imp.begin() == 1);
}

TEST_CASE("a leaking group dominates the importances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = leak_fixture(seed);
    RandomForestConfig cfg;
    cfg.seed = seed;
    const auto imp = rf_feature_group_importance(f.manifest, f.records, f.assignment, cfg);
    double total = 0.0;
    for (const auto& [g, v] : imp) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(importance_of(imp, "leak") > 0.9);
    CHECK(ranked(imp).front().first == "leak");
  }
}

TEST_CASE("pure noise spreads importance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = leak_fixture(100 + seed, 1000, 3, false);
    RandomForestConfig cfg;
    cfg.seed = seed;
    cfg.n_trees = 50;
    const auto imp = rf_feature_group_importance(f.manifest, f.records, f.assignment, cfg);
    double top = 0.0;
    for (const auto& [g, v] : imp) top = std::max(top, v);
    CHECK(top < 3.0 / static_cast<double>(imp.size()));
  }
}

TEST_CASE("single group takes all importance; degenerate targets fail") {
  DatasetManifest m;  // only the scaffold pseudo-group
  std::vector<MoleculeRecord> recs;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    recs.push_back(testing::record("m" + std::to_string(i), {}, 8, "s" + std::to_string(i % 2)));
    labels.push_back(i % 2);
  }
  const auto imp = rf_feature_group_importance(m, recs, assignment_from_ids(labels, Method::random));
  REQUIRE(imp.size() == 1);
  CHECK(imp[0].first == "scaffold");
  CHECK(imp[0].second == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(rf_feature_group_importance(m, recs, assignment_from_ids(std::vector<int>(20, 0), Method::random)),
                  std::invalid_argument);
  std::vector<int> lonely(20, 0);
  lonely[3] = 1;
  CHECK_THROWS_AS(rf_feature_group_importance(m, recs, assignment_from_ids(lonely, Method::random)),
                  std::invalid_argument);
}

TEST_CASE("feature sharing statistics") {
  DatasetManifest m = manifest_of({"const", "mixed"});
  std::vector<MoleculeRecord> recs;
  const std::vector<std::string> mixed{"x", "x", "x", "y", "y", "z", "x", "y", "w", "w"};
  for (int i = 0; i < 10; ++i)
    recs.push_back(testing::record("m" + std::to_string(i), {}, 8, "u" + std::to_string(i),
                                   {"c", mixed[static_cast<std::size_t>(i)]}));
  const auto stats = feature_sharing_statistics(m, recs);
  REQUIRE(stats.size() == 3);
  CHECK(stats[0].group == "scaffold");
  CHECK(stats[0].unique_values == 10);
  CHECK(stats[0].mean_sharing == 1.0);
  CHECK(stats[1].unique_values == 1);
  CHECK(stats[1].mean_sharing == 10.0);
  // x:4, y:3, w:2, z:1
  CHECK(stats[2].unique_values == 4);
  CHECK(stats[2].mean_sharing == 2.5);
  CHECK(stats[2].min_sharing == 1);
  CHECK(stats[2].max_sharing == 4);
}

TEST_CASE("overclustering flag") {
  DatasetManifest m;
  std::vector<MoleculeRecord> recs;
  for (int i = 0; i < 12; ++i) recs.push_back(testing::record("m" + std::to_string(i), {}, 8, "s" + std::to_string(i / 4)));
  // 3 scaffolds of 4; 6 clusters of 2 -> ratio 0.5
  std::vector<int> fine;
  for (int i = 0; i < 12; ++i) fine.push_back(i / 2);
  const auto a = overclustering_flag(assignment_from_ids(fine, Method::fed_lsh), m, recs);
  CHECK(a.flagged);
  CHECK(a.ratio == 0.5);
  CHECK(a.mean_group_sharing == 4.0);
  std::vector<int> exact;
  for (int i = 0; i < 12; ++i) exact.push_back(i / 4);
  const auto b = overclustering_flag(assignment_from_ids(exact, Method::fed_kmeans), m, recs);
  CHECK(!b.flagged);
  CHECK(b.ratio == 1.0);
  const auto c = overclustering_flag(assignment_from_ids(std::vector<int>(12, 0), Method::fed_kmeans), m, recs);
  CHECK(!c.flagged);
}
