#include <gtest/gtest.h>

#include <random>

#include "floodeval/error_analysis.hpp"
#include "support.hpp"

namespace fe = floodeval;

namespace {

fe::ScoreRecord score(const std::string& id, double b, double r, double f) {
  fe::ScoreRecord s;
  s.tile_id = id;
  s.building_iou = b;
  s.road_iou = r;
  s.flood_iou = f;
  return s;
}

std::vector<fe::ScoreRecord> one_dim(const std::vector<double>& xs) {
  std::vector<fe::ScoreRecord> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(score(support::tile_name(int(i)), xs[i], 0, 0));
  return out;
}

std::vector<double> sorted_centroids(const fe::ClusterModel& m) {
  std::vector<double> c;
  for (const auto& v : m.centroids) c.push_back(v[0]);
  std::sort(c.begin(), c.end());
  return c;
}

fe::MaskRaster flood_mask(int w, int h) {
  const auto tile = fe::Tile::from_geotransform("t", fe::AffineGeotransform(0, h, 1, -1), w, h, "local");
  return fe::MaskRaster::zeros("t", fe::MaskProduct::Flood, tile);
}

void fill(fe::MaskRaster& m, int channel, int r0, int r1, int c0, int c1) {
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) m.at(channel, r, c) = 255;
}

fe::MetricRow row(const std::string& model, double p, double r, double f1, double iou) {
  return {model, "---", {{"precision", p}, {"recall", r}, {"f1", f1}, {"iou", iou}, {"accuracy", std::nullopt}}};
}

const fe::MetricDelta& delta(const fe::ImprovementReport& rep, const std::string& metric) {
  for (const auto& d : rep.deltas)
    if (d.metric == metric) return d;
  throw std::runtime_error("no delta for " + metric);
}

}  // namespace

TEST(Cluster, TwoObviousGroups) {
  const auto m = fe::cluster_scores(one_dim({1, 2, 9, 10}), 2, 1, {"building_iou"});
  EXPECT_EQ(sorted_centroids(m), (std::vector<double>{1.5, 9.5}));
  EXPECT_DOUBLE_EQ(m.inertia, 1.0);
  EXPECT_EQ(m.assignments.at("tile_0000"), m.assignments.at("tile_0001"));
  EXPECT_NE(m.assignments.at("tile_0000"), m.assignments.at("tile_0002"));
}

TEST(Cluster, KEqualsNHasZeroInertiaAndKAboveNThrows) {
  const auto recs = one_dim({0.1, 0.4, 0.7, 0.9});
  EXPECT_EQ(fe::cluster_scores(recs, 4, 3, {"building_iou"}).inertia, 0.0);
  EXPECT_THROW(fe::cluster_scores(recs, 5, 3, {"building_iou"}), fe::ContractViolation);
  EXPECT_THROW(fe::cluster_scores(recs, 0, 3, {"building_iou"}), fe::ContractViolation);
  EXPECT_THROW(fe::cluster_scores(recs, 2, 3, {"accuracy"}), fe::ContractViolation);
}

TEST(Cluster, MatchesExhaustivePartitionSearch) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 60; ++t) {
    const int n = support::uniform_int(rng, 3, 9);
    const int k = support::uniform_int(rng, 1, std::min(n, 4));
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(support::uniform(rng, 0, 1));
    const auto m = fe::cluster_scores(one_dim(xs), k, 11, {"building_iou"});
    const auto best = oracle::best_partition_1d(xs, k);
    EXPECT_NEAR(m.inertia, best.inertia, 1e-12);
    const auto got = sorted_centroids(m);
    const bool matches = std::any_of(best.optimal.begin(), best.optimal.end(), [&](const auto& c) {
      for (std::size_t i = 0; i < c.size(); ++i)
        if (std::abs(c[i] - got[i]) > 1e-9) return false;
      return true;
    });
    EXPECT_TRUE(matches) << "n=" << n << " k=" << k;
  }
}

TEST(Cluster, NullDimensionExcludesTileWithWarning) {
  auto recs = one_dim({0.1, 0.2, 0.8, 0.9});
  for (auto& r : recs) r.apls_length = r.building_iou;
  recs[1].apls_length.reset();
  const auto m = fe::cluster_scores(recs, 2, 5, {"apls_length"});
  EXPECT_EQ(m.excluded, (std::vector<std::string>{"tile_0001"}));
  EXPECT_EQ(m.warnings.size(), 1u);
  EXPECT_EQ(m.assignments.count("tile_0001"), 0u);
  EXPECT_EQ(m.tile_ids.size(), 3u);
}

TEST(Cluster, SameSeedIsDeterministic) {
  std::mt19937_64 rng(2);
  std::vector<fe::ScoreRecord> recs;
  for (int i = 0; i < 120; ++i) recs.push_back(support::random_score(rng, support::tile_name(i)));
  const auto a = fe::cluster_scores(recs, 3, 7);
  const auto b = fe::cluster_scores(recs, 3, 7);
  EXPECT_EQ(fe::to_json(a).dump(), fe::to_json(b).dump());
  EXPECT_EQ(a.run_histories.size(), 10u);
}

TEST(Cluster, InertiaNeverIncreasesWithinARun) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<fe::ScoreRecord> recs;
    for (int i = 0; i < 80; ++i) recs.push_back(support::random_score(rng, support::tile_name(i)));
    const auto m = fe::cluster_scores(recs, support::uniform_int(rng, 2, 6), t);
    for (const auto& hist : m.run_histories)
      for (std::size_t i = 1; i < hist.size(); ++i) EXPECT_LE(hist[i], hist[i - 1] + 1e-12);
    EXPECT_EQ(m.inertia, m.inertia_history.back());
  }
}

TEST(Cluster, ThreeRegimesAreRecovered) {
  // Tiles that fail everywhere, tiles that only miss roads, and tiles that work.
  std::mt19937_64 rng(4);
  std::vector<fe::ScoreRecord> recs;
  const double centres[3][3] = {{0.1, 0.1, 0.1}, {0.8, 0.2, 0.7}, {0.9, 0.85, 0.9}};
  for (int i = 0; i < 90; ++i) {
    const auto& c = centres[i % 3];
    recs.push_back(score(support::tile_name(i), c[0] + support::uniform(rng, -0.04, 0.04),
                         c[1] + support::uniform(rng, -0.04, 0.04), c[2] + support::uniform(rng, -0.04, 0.04)));
  }
  const auto m = fe::cluster_scores(recs, 3, 7);
  for (int i = 3; i < 90; ++i)
    EXPECT_EQ(m.assignments.at(recs[i].tile_id), m.assignments.at(recs[i % 3].tile_id));
  std::set<int> labels;
  for (int i = 0; i < 3; ++i) labels.insert(m.assignments.at(recs[i].tile_id));
  EXPECT_EQ(labels.size(), 3u);
}

// ---------------------------------------------------------------------------

TEST(Percentile, LinearInterpolation) {
  std::vector<double> xs;
  for (int i = 1; i <= 10; ++i) xs.push_back(i / 10.0);
  EXPECT_NEAR(fe::percentile(xs, 0.5), 0.55, 1e-12);
  EXPECT_NEAR(fe::percentile(xs, 0.25), 0.325, 1e-12);
  EXPECT_EQ(fe::percentile({3.0}, 0.25), 3.0);
  EXPECT_THROW(fe::percentile({}, 0.5), fe::ContractViolation);
}

TEST(BadCases, TenTilesFixture) {
  std::vector<fe::ScoreRecord> recs;
  for (int i = 1; i <= 10; ++i) recs.push_back(score(support::tile_name(i), i / 10.0, 0.5, 0.5));
  const auto s = fe::select_bad_cases(recs, {"building_iou"});
  EXPECT_NEAR(s.medians.at("building_iou"), 0.55, 1e-12);
  EXPECT_NEAR(s.quartiles.at("building_iou"), 0.325, 1e-12);
  EXPECT_EQ(s.criterion1.size(), 5u);
  EXPECT_EQ(s.criterion2, (std::set<std::string>{support::tile_name(1), support::tile_name(2), support::tile_name(3)}));
  EXPECT_EQ(s.combined, s.criterion1);
  ASSERT_EQ(s.reasons.at(support::tile_name(1)).size(), 2u);
  EXPECT_EQ(s.reasons.at(support::tile_name(1))[1].criterion, 2);
}

TEST(BadCases, IdenticalScoresSelectNothing) {
  std::vector<fe::ScoreRecord> recs;
  for (int i = 0; i < 8; ++i) recs.push_back(score(support::tile_name(i), 0.4, 0.4, 0.4));
  const auto s = fe::select_bad_cases(recs);
  EXPECT_TRUE(s.combined.empty());
}

TEST(BadCases, TooFewRecordsRejected) {
  EXPECT_THROW(fe::select_bad_cases(one_dim({0.1, 0.2, 0.3}), {"building_iou"}), fe::ContractViolation);
}

TEST(BadCases, SelectionsAgreeWithOracleAndNest) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<fe::ScoreRecord> recs;
    const int n = support::uniform_int(rng, 4, 60);
    for (int i = 0; i < n; ++i) recs.push_back(support::random_score(rng, support::tile_name(i)));
    const auto s = fe::select_bad_cases(recs, fe::metric_names());
    for (const auto& [metric, median] : s.medians) {
      std::vector<double> vals;
      for (const auto& r : recs)
        if (auto v = fe::metric_value(r, metric)) vals.push_back(*v);
      EXPECT_NEAR(median, oracle::percentile(vals, 0.5), 1e-12);
      EXPECT_NEAR(s.quartiles.at(metric), oracle::percentile(vals, 0.25), 1e-12);
    }
    // Below the quartile implies below the median.
    for (const auto& id : s.criterion2) EXPECT_TRUE(s.criterion1.count(id));
    EXPECT_EQ(s.combined, s.criterion1);
    const auto back = fe::bad_cases_from_json(fe::to_json(s));
    EXPECT_EQ(back.combined, s.combined);
    EXPECT_EQ(back.medians, s.medians);
  }
}

// ---------------------------------------------------------------------------

TEST(ImprovementReport, ErroneousDataRemovalRow) {
  const auto rep = fe::improvement_report(row("Baseline", 0.758, 0.812, 0.784, 0.645),
                                          row("Err. Data Rem.", 0.789, 0.821, 0.805, 0.674), {{"iou", 4.5}, {"f1", 2.6}});
  EXPECT_EQ(fe::format_pct(*delta(rep, "iou").relative_pct), "+4.5");
  EXPECT_EQ(fe::format_pct(*delta(rep, "f1").relative_pct), "+2.7");
  EXPECT_FALSE(delta(rep, "iou").claim_mismatch);
  EXPECT_TRUE(delta(rep, "f1").claim_mismatch);
  EXPECT_NEAR(*delta(rep, "iou").absolute, 0.029, 1e-12);
  EXPECT_FALSE(delta(rep, "accuracy").relative_pct.has_value());
}

TEST(ImprovementReport, HistogramEqualizationRow) {
  const auto rep = fe::improvement_report(row("Baseline", 0.758, 0.812, 0.784, 0.645),
                                          row("Hist. Eq.", 0.799, 0.777, 0.788, 0.65), {{"precision", 5.0}});
  EXPECT_EQ(fe::format_pct(*delta(rep, "precision").relative_pct), "+5.4");
  EXPECT_TRUE(delta(rep, "precision").claim_mismatch);
  EXPECT_LT(*delta(rep, "recall").relative_pct, 0.0);
  const auto md = fe::render_markdown(rep);
  EXPECT_NE(md.find("Claim discrepancies"), std::string::npos);
  EXPECT_NE(md.find("precision: computed +5.4% vs claimed +5.0%"), std::string::npos);
}

TEST(ImprovementReport, IdenticalTablesGiveZeroDeltas) {
  const auto a = row("A", 0.5, 0.6, 0.7, 0.8);
  const auto rep = fe::improvement_report(a, a);
  for (const auto& d : rep.deltas) {
    if (!d.before) continue;
    EXPECT_EQ(*d.absolute, 0.0);
    EXPECT_EQ(*d.relative_pct, 0.0);
  }
}

TEST(ImprovementReport, ZeroBaselineIsUndefined) {
  const auto rep = fe::improvement_report(row("A", 0.0, 0.5, 0.5, 0.5), row("B", 0.3, 0.5, 0.5, 0.5), {{"precision", 10}});
  EXPECT_FALSE(delta(rep, "precision").relative_pct.has_value());
  EXPECT_NEAR(*delta(rep, "precision").absolute, 0.3, 1e-15);
  EXPECT_TRUE(delta(rep, "precision").claim_mismatch);
  EXPECT_NE(fe::render_markdown(rep).find("undefined"), std::string::npos);
}

TEST(ImprovementReport, AbsoluteDeltasAreAntisymmetric) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    const auto a = row("A", support::uniform(rng, 0.1, 1), support::uniform(rng, 0.1, 1), support::uniform(rng, 0.1, 1),
                       support::uniform(rng, 0.1, 1));
    const auto b = row("B", support::uniform(rng, 0.1, 1), support::uniform(rng, 0.1, 1), support::uniform(rng, 0.1, 1),
                       support::uniform(rng, 0.1, 1));
    const auto ab = fe::improvement_report(a, b), ba = fe::improvement_report(b, a);
    for (std::size_t i = 0; i < ab.deltas.size(); ++i) {
      if (!ab.deltas[i].absolute) continue;
      EXPECT_EQ(*ab.deltas[i].absolute, -*ba.deltas[i].absolute);
      const double x = *ab.deltas[i].before, y = *ab.deltas[i].after;
      EXPECT_NEAR(*ab.deltas[i].relative_pct, 100.0 * (y - x) / x, 1e-9);
    }
  }
}

TEST(ImprovementReport, MismatchedKeysRejected) {
  auto a = row("A", 0.5, 0.5, 0.5, 0.5);
  auto b = a;
  b.metrics.erase("accuracy");
  EXPECT_THROW(fe::improvement_report(a, b), fe::ContractViolation);
}

TEST(ImprovementReport, RenderedTables) {
  const auto rep = fe::improvement_report(row("Baseline", 0.758, 0.812, 0.784, 0.645),
                                          row("Err. Data Rem.", 0.789, 0.821, 0.805, 0.674));
  const auto md = fe::render_markdown(rep);
  EXPECT_EQ(md.substr(0, md.find('\n')), "| Model | Improv. | Prec. | Recall | F1-Score | IoU | Acc. |");
  EXPECT_NE(md.find("| Baseline | --- | 0.758 | 0.812 | 0.784 | 0.645 | --- |"), std::string::npos);
  EXPECT_NE(md.find("| Delta (rel %) | | +4.1 | +1.1 | +2.7 | +4.5 | undefined |"), std::string::npos);
  EXPECT_EQ(md.find("Claim discrepancies"), std::string::npos);
  const auto csv = fe::render_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,before,after,abs_delta,rel_delta_pct,claimed_pct,claim_mismatch");
  EXPECT_NE(csv.find("\niou,0.645,0.674,"), std::string::npos);
  EXPECT_NE(csv.find("\naccuracy,,,,,,false\n"), std::string::npos);
}

TEST(ImprovementReport, RowFromJson) {
  const auto r = fe::metric_row_from_json(fe::json::parse(R"({"model":"M","metrics":{"precision":0.5,"iou":0.25}})"));
  EXPECT_EQ(r.model, "M");
  EXPECT_EQ(r.metrics.at("precision"), 0.5);
  EXPECT_FALSE(r.metrics.at("recall").has_value());
  EXPECT_EQ(r.metrics.size(), fe::report_columns().size());
}

// ---------------------------------------------------------------------------

TEST(ErrorTags, NamesRoundTrip) {
  for (auto t : {fe::ErrorType::TargetOmission, fe::ErrorType::SpatialConfusion, fe::ErrorType::MissingInformation,
                 fe::ErrorType::InherentInaccuracy})
    EXPECT_EQ(fe::error_type_from_string(fe::to_string(t)), t);
  EXPECT_FALSE(fe::error_type_from_string("Other").has_value());
}

TEST(ErrorTags, ConnectedComponentsAreFourConnected) {
  // Two diagonal pixels are separate components; a plus sign is one.
  const std::vector<std::uint8_t> diag{1, 0, 0, 1};
  EXPECT_EQ(fe::connected_components(diag, 2, 2).size(), 2u);
  const std::vector<std::uint8_t> plus{0, 1, 0, 1, 1, 1, 0, 1, 0};
  const auto comps = fe::connected_components(plus, 3, 3);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].size(), 5u);
}

TEST(ErrorTags, SmallMissedBuildingIsOmission) {
  auto ref = flood_mask(20, 20), pred = flood_mask(20, 20);
  fill(ref, fe::kNonFloodedBuilding, 2, 6, 2, 7);  // 30 pixels
  const auto tags = fe::suggest_error_tags(score("t", 0, 1, 1), ref, pred);
  ASSERT_EQ(tags.size(), 1u);
  EXPECT_EQ(tags[0].type, fe::ErrorType::TargetOmission);
  EXPECT_EQ(tags[0].source, fe::TagSource::Heuristic);
  // Above the size threshold the same miss is not tagged.
  fe::TagParams strict;
  strict.small_object_px = 30;
  EXPECT_TRUE(fe::suggest_error_tags(score("t", 0, 1, 1), ref, pred, strict).empty());
}

TEST(ErrorTags, RoadPredictedInsideBuildingIsConfusion) {
  auto ref = flood_mask(20, 20), pred = flood_mask(20, 20);
  fill(ref, fe::kFloodedBuilding, 5, 14, 5, 14);
  fill(pred, fe::kFloodedBuilding, 5, 14, 5, 14);
  fill(pred, fe::kFloodedRoad, 9, 10, 0, 19);
  const auto tags = fe::suggest_error_tags(score("t", 0.8, 0, 0.8), ref, pred);
  ASSERT_EQ(tags.size(), 1u);
  EXPECT_EQ(tags[0].type, fe::ErrorType::SpatialConfusion);
}

TEST(ErrorTags, PerfectPredictionHasNoTags) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const auto m = support::random_flood_mask(rng, "t", 32, 32, 6);
    EXPECT_TRUE(fe::suggest_error_tags(score("t", 1, 1, 1), m, m).empty());
  }
}

TEST(ErrorTags, HumanTagsWin) {
  const std::vector<fe::ErrorTag> existing{{"a", fe::ErrorType::InherentInaccuracy, fe::TagSource::Human}};
  const std::vector<fe::ErrorTag> suggested{{"a", fe::ErrorType::TargetOmission, fe::TagSource::Heuristic},
                                            {"b", fe::ErrorType::SpatialConfusion, fe::TagSource::Heuristic},
                                            {"b", fe::ErrorType::SpatialConfusion, fe::TagSource::Heuristic}};
  const auto merged = fe::merge_tags(existing, suggested);
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0], existing[0]);
  EXPECT_EQ(merged[1].tile_id, "b");
}
