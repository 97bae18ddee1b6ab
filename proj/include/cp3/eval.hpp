#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cp3/frame.hpp"

namespace cp3 {

// Confusion counters under ROI rules. Merging is associative and
// commutative, so per-frame counts may be accumulated in parallel and summed.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Tallies one frame into `counts`. Unknown and outside-ROI pixels are
// skipped entirely; shadow counts as background truth.
ConfusionCounts accumulate(ConfusionCounts counts, const LabelMask& mask,
                           const GroundTruthFrame& gt);

// The seven reported figures, in report column order. A metric whose
// denominator is zero carries the NaN sentinel (printed as "undefined").
struct MetricsReport {
  double recall = 0.0;
  double specificity = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  double pwc = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
};

inline bool metric_defined(double v) { return v == v; }  // not NaN

// recall = tp/(tp+fn), specificity = tn/(tn+fp), pwc = 100(fn+fp)/total,
// precision = tp/(tp+fp), f = 2PR/(P+R). fnr and fpr are computed as exact
// complements (1 - recall, 1 - specificity) so the identities hold bit-exactly.
MetricsReport metrics(const ConfusionCounts& counts);

// Unweighted per-metric mean over videos; undefined entries are excluded per
// metric (a metric undefined everywhere stays undefined).
MetricsReport aggregate(std::span<const MetricsReport> reports);

// "0.912345" or "undefined".
std::string format_metric(double v);

// Fixed-width table over (name, report) rows:
// Recall Specificity FPR FNR PWC Precision F-Measure.
std::string format_report_table(std::span<const std::pair<std::string, MetricsReport>> rows);

// Machine-readable key=value lines; includes raw counters when provided.
std::string format_report_kv(const MetricsReport& report,
                             const ConfusionCounts* counts = nullptr);

// Inverse of format_report_kv (counter lines optional, ignored keys rejected).
MetricsReport parse_report_kv(const std::string& text);

}  // namespace cp3
