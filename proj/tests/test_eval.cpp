// Evaluation: confusion accumulation under ROI rules, metric formulas and
// their exact identities, aggregation, and report formatting.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cp3/eval.hpp"
#include "cp3/rng.hpp"

using cp3::ConfusionCounts;
using cp3::GroundTruthFrame;
using cp3::GtLabel;
using cp3::Label;
using cp3::LabelMask;
using cp3::MetricsReport;

TEST_CASE("accumulate: all-foreground agreement is pure true positives") {
  const LabelMask mask(10, 10, Label::Foreground);
  const GroundTruthFrame gt(10, 10, GtLabel::ForegroundGt);
  const ConfusionCounts c = cp3::accumulate({}, mask, gt);
  CHECK(c.tp == 100);
  CHECK(c.fp == 0);
  CHECK(c.tn == 0);
  CHECK(c.fn == 0);
}

TEST_CASE("accumulate: unknown and outside-ROI pixels never count") {
  const LabelMask mask(4, 4, Label::Foreground);
  GroundTruthFrame gt(4, 4, GtLabel::UnknownGt);
  for (int u = 0; u < 4; ++u) gt.at(u, 2) = GtLabel::OutsideRoi;
  const ConfusionCounts before{.tp = 3, .fp = 1, .tn = 4, .fn = 1};
  CHECK(cp3::accumulate(before, mask, gt) == before);
}

TEST_CASE("accumulate: one pixel in each confusion cell") {
  LabelMask mask(2, 2);
  mask.at(0, 0) = Label::Foreground;  // gt fg  -> tp
  mask.at(1, 0) = Label::Foreground;  // gt bg  -> fp
  mask.at(0, 1) = Label::Background;  // gt fg  -> fn
  mask.at(1, 1) = Label::Background;  // gt bg  -> tn
  GroundTruthFrame gt(2, 2);
  gt.at(0, 0) = GtLabel::ForegroundGt;
  gt.at(1, 0) = GtLabel::BackgroundGt;
  gt.at(0, 1) = GtLabel::ForegroundGt;
  gt.at(1, 1) = GtLabel::BackgroundGt;
  const ConfusionCounts c = cp3::accumulate({}, mask, gt);
  CHECK(c == ConfusionCounts{.tp = 1, .fp = 1, .tn = 1, .fn = 1});
}

TEST_CASE("accumulate: shadow is background truth") {
  LabelMask mask(2, 1);
  mask.at(0, 0) = Label::Foreground;  // detecting a shadow is a false positive
  mask.at(1, 0) = Label::Background;  // leaving it alone is a true negative
  const GroundTruthFrame gt(2, 1, GtLabel::ShadowGt);
  const ConfusionCounts c = cp3::accumulate({}, mask, gt);
  CHECK(c == ConfusionCounts{.tp = 0, .fp = 1, .tn = 1, .fn = 0});
}

TEST_CASE("accumulate: frame-by-frame accumulation equals summed counts") {
  cp3::Rng rng(11);
  std::vector<LabelMask> masks;
  std::vector<GroundTruthFrame> gts;
  for (int f = 0; f < 4; ++f) {
    LabelMask m(8, 8);
    GroundTruthFrame g(8, 8);
    for (int v = 0; v < 8; ++v)
      for (int u = 0; u < 8; ++u) {
        m.at(u, v) = rng.next_below(2) ? Label::Foreground : Label::Background;
        g.at(u, v) = static_cast<GtLabel>(rng.next_below(5));
      }
    masks.push_back(std::move(m));
    gts.push_back(std::move(g));
  }
  ConfusionCounts running{};
  ConfusionCounts summed{};
  for (int f = 0; f < 4; ++f) {
    running = cp3::accumulate(running, masks[static_cast<std::size_t>(f)],
                              gts[static_cast<std::size_t>(f)]);
    summed += cp3::accumulate({}, masks[static_cast<std::size_t>(f)],
                              gts[static_cast<std::size_t>(f)]);
  }
  CHECK(running == summed);
}

TEST_CASE("accumulate: dimension mismatch is rejected") {
  const LabelMask mask(4, 4);
  const GroundTruthFrame gt(4, 5);
  CHECK_THROWS_AS(cp3::accumulate({}, mask, gt), cp3::InvalidInputError);
}

TEST_CASE("accumulate matches a straight-line oracle on random frames") {
  cp3::Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMask mask(8, 8);
    GroundTruthFrame gt(8, 8);
    ConfusionCounts oracle{};
    for (int v = 0; v < 8; ++v)
      for (int u = 0; u < 8; ++u) {
        const bool fg = rng.next_below(2) != 0;
        const GtLabel g = static_cast<GtLabel>(rng.next_below(5));
        mask.at(u, v) = fg ? Label::Foreground : Label::Background;
        gt.at(u, v) = g;
        if (g == GtLabel::UnknownGt || g == GtLabel::OutsideRoi) continue;
        if (g == GtLabel::ForegroundGt)
          fg ? ++oracle.tp : ++oracle.fn;
        else
          fg ? ++oracle.fp : ++oracle.tn;
      }
    CHECK(cp3::accumulate({}, mask, gt) == oracle);
  }
}

TEST_CASE("metrics: worked example with exact values") {
  const MetricsReport r = cp3::metrics({.tp = 85, .fp = 0, .tn = 900, .fn = 15});
  CHECK(r.recall == 0.85);  // 85/100 rounds to the same double as the literal
  CHECK(r.specificity == 1.0);
  CHECK(r.fpr == 0.0);
  CHECK(r.fnr == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(r.pwc == 1.5);  // 100 * 15 / 1000, all exact
  CHECK(r.precision == 1.0);
  CHECK(r.f_measure == doctest::Approx(2.0 * 0.85 / 1.85).epsilon(1e-15));
}

TEST_CASE("metrics: denominator-free metrics carry the undefined sentinel") {
  const MetricsReport r = cp3::metrics({.tp = 0, .fp = 0, .tn = 10, .fn = 0});
  CHECK_FALSE(cp3::metric_defined(r.recall));
  CHECK_FALSE(cp3::metric_defined(r.fnr));
  CHECK_FALSE(cp3::metric_defined(r.precision));
  CHECK_FALSE(cp3::metric_defined(r.f_measure));
  CHECK(r.specificity == 1.0);
  CHECK(r.fpr == 0.0);
  CHECK(r.pwc == 0.0);
}

TEST_CASE("metrics: zero precision and recall leave the F-measure undefined") {
  const MetricsReport r = cp3::metrics({.tp = 0, .fp = 5, .tn = 10, .fn = 5});
  CHECK(r.recall == 0.0);
  CHECK(r.precision == 0.0);
  CHECK_FALSE(cp3::metric_defined(r.f_measure));
}

TEST_CASE("metrics: empty evaluation is an error") {
  CHECK_THROWS_AS(cp3::metrics(ConfusionCounts{}), cp3::EmptyEvaluationError);
}

TEST_CASE("metrics: complement identities hold bit-exactly") {
  cp3::Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const ConfusionCounts c{.tp = rng.next_below(1000), .fp = rng.next_below(1000),
                            .tn = rng.next_below(1000), .fn = rng.next_below(1000)};
    if (c.total() == 0) continue;
    const MetricsReport r = cp3::metrics(c);
    if (cp3::metric_defined(r.recall)) CHECK(r.recall + r.fnr == 1.0);
    if (cp3::metric_defined(r.specificity)) CHECK(r.specificity + r.fpr == 1.0);
  }
}

TEST_CASE("metrics: error rate is invariant to scaling every count") {
  const ConfusionCounts c{.tp = 85, .fp = 3, .tn = 897, .fn = 15};
  ConfusionCounts scaled;
  scaled.tp = c.tp * 7;
  scaled.fp = c.fp * 7;
  scaled.tn = c.tn * 7;
  scaled.fn = c.fn * 7;
  CHECK(cp3::metrics(c).pwc == cp3::metrics(scaled).pwc);
  CHECK(cp3::metrics(c).recall == cp3::metrics(scaled).recall);
}

TEST_CASE("aggregate: identical reports average to themselves exactly") {
  const MetricsReport r = cp3::metrics({.tp = 85, .fp = 3, .tn = 897, .fn = 15});
  const std::vector<MetricsReport> reports{r, r};
  const MetricsReport mean = cp3::aggregate(reports);
  CHECK(mean.recall == r.recall);
  CHECK(mean.pwc == r.pwc);
  CHECK(mean.f_measure == r.f_measure);
}

TEST_CASE("aggregate: plain mean and per-metric exclusion of undefined entries") {
  MetricsReport a;
  a.recall = 0.8;
  MetricsReport b;
  b.recall = 0.9;
  MetricsReport c;
  c.recall = std::nan("");
  a.precision = b.precision = c.precision = std::nan("");
  const std::vector<MetricsReport> reports{a, b, c};
  const MetricsReport mean = cp3::aggregate(reports);
  CHECK(mean.recall == doctest::Approx(0.85).epsilon(1e-15));  // NaN entry excluded
  CHECK_FALSE(cp3::metric_defined(mean.precision));            // undefined everywhere
  CHECK_THROWS_AS(cp3::aggregate(std::span<const MetricsReport>{}), cp3::InvalidInputError);
}

TEST_CASE("metric formatting: six decimals or the undefined word") {
  CHECK(cp3::format_metric(0.5) == "0.500000");
  CHECK(cp3::format_metric(1.0) == "1.000000");
  CHECK(cp3::format_metric(std::nan("")) == "undefined");
}

TEST_CASE("report table: header, one row per video, aligned columns") {
  const MetricsReport r = cp3::metrics({.tp = 85, .fp = 0, .tn = 900, .fn = 15});
  const std::vector<std::pair<std::string, MetricsReport>> rows{{"office", r},
                                                                {"a_long_video_name", r}};
  const std::string table = cp3::format_report_table(rows);
  // Three lines: header + two rows.
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);
  CHECK(table.find("video") == 0);
  for (const char* h : {"Recall", "Specificity", "FPR", "FNR", "PWC", "Precision", "F-Measure"})
    CHECK(table.find(h) != std::string::npos);
  CHECK(table.find("office") != std::string::npos);
  CHECK(table.find("0.850000") != std::string::npos);
  // Header and row lines line up: equal lengths.
  std::vector<std::size_t> lengths;
  std::size_t pos = 0;
  while (true) {
    const std::size_t nl = table.find('\n', pos);
    if (nl == std::string::npos) break;
    lengths.push_back(nl - pos);
    pos = nl + 1;
  }
  REQUIRE(lengths.size() == 3);
  CHECK(lengths[0] == lengths[1]);
  CHECK(lengths[1] == lengths[2]);
}

TEST_CASE("key=value report round trip at print precision") {
  const MetricsReport r = cp3::metrics({.tp = 71, .fp = 9, .tn = 402, .fn = 18});
  const ConfusionCounts c{.tp = 71, .fp = 9, .tn = 402, .fn = 18};
  const std::string text = cp3::format_report_kv(r, &c);
  CHECK(text.find("tp=71\n") != std::string::npos);
  CHECK(text.find("fn=18\n") != std::string::npos);

  const MetricsReport back = cp3::parse_report_kv(text);
  const auto near6 = [](double a, double b) {  // six printed decimals
    return std::abs(a - b) <= 5e-7;
  };
  CHECK(near6(back.recall, r.recall));
  CHECK(near6(back.specificity, r.specificity));
  CHECK(near6(back.fpr, r.fpr));
  CHECK(near6(back.fnr, r.fnr));
  CHECK(near6(back.pwc, r.pwc));
  CHECK(near6(back.precision, r.precision));
  CHECK(near6(back.f_measure, r.f_measure));
}

TEST_CASE("key=value report: undefined round trip and malformed input") {
  const MetricsReport r = cp3::metrics({.tp = 0, .fp = 0, .tn = 10, .fn = 0});
  const MetricsReport back = cp3::parse_report_kv(cp3::format_report_kv(r));
  CHECK_FALSE(cp3::metric_defined(back.recall));
  CHECK(back.specificity == doctest::Approx(1.0));

  CHECK_THROWS_AS(cp3::parse_report_kv("bogus_metric=1.0\n"), cp3::InvalidInputError);
  CHECK_THROWS_AS(cp3::parse_report_kv("recall\n"), cp3::InvalidInputError);
  CHECK_THROWS_AS(cp3::parse_report_kv("recall=abc\n"), cp3::InvalidInputError);
}
