#include "cp3/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cp3 {

namespace {
constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();
}

ConfusionCounts accumulate(ConfusionCounts counts, const LabelMask& mask,
                           const GroundTruthFrame& gt) {
  require(mask.width == gt.width && mask.height == gt.height,
          "accumulate: mask and ground truth dimensions differ");
  const std::size_t n = mask.labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const GtLabel g = gt.labels[i];
    if (g == GtLabel::UnknownGt || g == GtLabel::OutsideRoi) continue;
    const bool truth_fg = (g == GtLabel::ForegroundGt);  // shadow scores as background
    const bool detected_fg = (mask.labels[i] == Label::Foreground);
    if (truth_fg)
      detected_fg ? ++counts.tp : ++counts.fn;
    else
      detected_fg ? ++counts.fp : ++counts.tn;
  }
  return counts;
}

MetricsReport metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw EmptyEvaluationError("metrics: no counted pixels");
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);

  MetricsReport r;
  r.recall = (c.tp + c.fn) ? tp / (tp + fn) : kUndefined;
  r.specificity = (c.tn + c.fp) ? tn / (tn + fp) : kUndefined;
  // Complements rather than fp/(fp+tn): the pairings then sum to 1 exactly.
  r.fnr = metric_defined(r.recall) ? 1.0 - r.recall : kUndefined;
  r.fpr = metric_defined(r.specificity) ? 1.0 - r.specificity : kUndefined;
  r.pwc = 100.0 * (fn + fp) / (tp + fn + fp + tn);
  r.precision = (c.tp + c.fp) ? tp / (tp + fp) : kUndefined;
  if (metric_defined(r.precision) && metric_defined(r.recall) && r.precision + r.recall > 0.0)
    r.f_measure = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  else
    r.f_measure = kUndefined;
  return r;
}

MetricsReport aggregate(std::span<const MetricsReport> reports) {
  require(!reports.empty(), "aggregate: no reports");
  MetricsReport out;
  const auto mean_of = [&](double MetricsReport::* field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const MetricsReport& r : reports) {
      const double v = r.*field;
      if (metric_defined(v)) {
        sum += v;
        ++n;
      }
    }
    return n ? sum / static_cast<double>(n) : kUndefined;
  };
  out.recall = mean_of(&MetricsReport::recall);
  out.specificity = mean_of(&MetricsReport::specificity);
  out.fpr = mean_of(&MetricsReport::fpr);
  out.fnr = mean_of(&MetricsReport::fnr);
  out.pwc = mean_of(&MetricsReport::pwc);
  out.precision = mean_of(&MetricsReport::precision);
  out.f_measure = mean_of(&MetricsReport::f_measure);
  return out;
}

std::string format_metric(double v) {
  if (!metric_defined(v)) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string format_report_table(std::span<const std::pair<std::string, MetricsReport>> rows) {
  std::ostringstream os;
  std::size_t name_w = 8;
  for (const auto& [name, _] : rows) name_w = std::max(name_w, name.size());
  const auto cell = [&os](const std::string& s) {
    os << ' ';
    os.width(11);
    os << s;
  };
  os.setf(std::ios::left);
  os.width(static_cast<std::streamsize>(name_w));
  os << "video";
  os.unsetf(std::ios::left);
  for (const char* h : {"Recall", "Specificity", "FPR", "FNR", "PWC", "Precision", "F-Measure"})
    cell(h);
  os << '\n';
  for (const auto& [name, r] : rows) {
    os.setf(std::ios::left);
    os.width(static_cast<std::streamsize>(name_w));
    os << name;
    os.unsetf(std::ios::left);
    for (double v : {r.recall, r.specificity, r.fpr, r.fnr, r.pwc, r.precision, r.f_measure})
      cell(format_metric(v));
    os << '\n';
  }
  return os.str();
}

std::string format_report_kv(const MetricsReport& r, const ConfusionCounts* counts) {
  std::ostringstream os;
  os << "recall=" << format_metric(r.recall) << '\n'
     << "specificity=" << format_metric(r.specificity) << '\n'
     << "fpr=" << format_metric(r.fpr) << '\n'
     << "fnr=" << format_metric(r.fnr) << '\n'
     << "pwc=" << format_metric(r.pwc) << '\n'
     << "precision=" << format_metric(r.precision) << '\n'
     << "f_measure=" << format_metric(r.f_measure) << '\n';
  if (counts)
    os << "tp=" << counts->tp << '\n'
       << "fp=" << counts->fp << '\n'
       << "tn=" << counts->tn << '\n'
       << "fn=" << counts->fn << '\n';
  return os.str();
}

MetricsReport parse_report_kv(const std::string& text) {
  MetricsReport r;
  r.recall = r.specificity = r.fpr = r.fnr = r.pwc = r.precision = r.f_measure = kUndefined;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos, "report: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "tp" || key == "fp" || key == "tn" || key == "fn") continue;
    double v = kUndefined;
    if (value != "undefined") {
      try {
        v = std::stod(value);
      } catch (const std::exception&) {
        throw InvalidInputError("report: bad value in line '" + line + "'");
      }
    }
    if (key == "recall")
      r.recall = v;
    else if (key == "specificity")
      r.specificity = v;
    else if (key == "fpr")
      r.fpr = v;
    else if (key == "fnr")
      r.fnr = v;
    else if (key == "pwc")
      r.pwc = v;
    else if (key == "precision")
      r.precision = v;
    else if (key == "f_measure")
      r.f_measure = v;
    else
      throw InvalidInputError("report: unknown key '" + key + "'");
  }
  return r;
}

}  // namespace cp3
