#include "cp3/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace cp3 {

namespace fs = std::filesystem;

namespace {

// Splits "in%06d.jpg" into prefix "in", pad width 6, suffix ".jpg".
struct PatternParts {
  std::string prefix;
  int pad = 0;
  std::string suffix;
};

PatternParts split_pattern(const std::string& pattern) {
  const std::size_t pct = pattern.find('%');
  require(pct != std::string::npos, "frame pattern '" + pattern + "' has no % directive");
  std::size_t i = pct + 1;
  int pad = 0;
  if (i < pattern.size() && pattern[i] == '0') {
    ++i;
    while (i < pattern.size() && std::isdigit(pattern[i])) {
      pad = pad * 10 + (pattern[i] - '0');
      ++i;
    }
  }
  require(i < pattern.size() && pattern[i] == 'd',
          "frame pattern '" + pattern + "' must use a %0Nd or %d directive");
  require(pattern.find('%', i) == std::string::npos,
          "frame pattern '" + pattern + "' has more than one directive");
  return {pattern.substr(0, pct), pad, pattern.substr(i + 1)};
}

}  // namespace

std::string format_pattern(const std::string& pattern, int index) {
  const PatternParts parts = split_pattern(pattern);
  std::string digits = std::to_string(index);
  if (static_cast<int>(digits.size()) < parts.pad)
    digits.insert(0, static_cast<std::size_t>(parts.pad) - digits.size(), '0');
  return parts.prefix + digits + parts.suffix;
}

std::optional<int> match_pattern(const std::string& pattern, const std::string& name) {
  const PatternParts parts = split_pattern(pattern);
  if (name.size() <= parts.prefix.size() + parts.suffix.size()) return std::nullopt;
  if (name.compare(0, parts.prefix.size(), parts.prefix) != 0) return std::nullopt;
  if (name.compare(name.size() - parts.suffix.size(), parts.suffix.size(), parts.suffix) != 0)
    return std::nullopt;
  const std::size_t begin = parts.prefix.size();
  const std::size_t len = name.size() - parts.prefix.size() - parts.suffix.size();
  if (len > 9) return std::nullopt;
  int value = 0;
  const char* first = name.data() + begin;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) return std::nullopt;
  return value;
}

void apply_roi(GroundTruthFrame& gt, const LabelMask& roi) {
  require(gt.width == roi.width && gt.height == roi.height,
          "ROI mask dimensions do not match the ground truth");
  for (std::size_t i = 0; i < gt.labels.size(); ++i)
    if (roi.labels[i] == Label::Background) gt.labels[i] = GtLabel::OutsideRoi;
}

std::pair<int, int> read_temporal_roi(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DecodeError(path + ": cannot open temporal ROI file");
  long long first = 0, last = 0;
  if (!(in >> first >> last))
    throw DecodeError(path + ": expected two integers (first and last frame)");
  if (first < 1 || last < first)
    throw DecodeError(path + ": invalid temporal ROI [" + std::to_string(first) + ", " +
                      std::to_string(last) + "]");
  return {static_cast<int>(first), static_cast<int>(last)};
}

SequenceReader::SequenceReader(SequenceSpec spec) : spec_(std::move(spec)) {
  require(!spec_.input_dir.empty(), "sequence: input directory not set");
  require(spec_.first >= 0 && spec_.last >= 0, "sequence: negative temporal ROI bound");
  if (spec_.first > 0 && spec_.last > 0)
    require(spec_.first <= spec_.last, "sequence: temporal ROI first > last");
  std::error_code ec;
  if (!fs::is_directory(spec_.input_dir, ec))
    throw InvalidInputError("sequence: input directory does not exist: " + spec_.input_dir);
  if (!spec_.groundtruth_dir.empty() && !fs::is_directory(spec_.groundtruth_dir, ec))
    throw InvalidInputError("sequence: ground-truth directory does not exist: " +
                            spec_.groundtruth_dir);

  for (const fs::directory_entry& entry : fs::directory_iterator(spec_.input_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (const std::optional<int> idx = match_pattern(spec_.frame_pattern, name))
      frames_.emplace(*idx, name);
  }
  if (frames_.empty())
    throw InvalidInputError("sequence: no files matching '" + spec_.frame_pattern + "' in " +
                            spec_.input_dir);
  first_ = spec_.first > 0 ? spec_.first : frames_.begin()->first;
  last_ = spec_.last > 0 ? spec_.last : frames_.rbegin()->first;
  require(first_ <= last_, "sequence: empty frame range after applying the temporal ROI");
  cursor_ = first_;

  if (!spec_.roi_path.empty()) roi_ = read_mask(spec_.roi_path);
}

std::optional<SequenceItem> SequenceReader::next() {
  if (cursor_ > last_) return std::nullopt;
  const int index = cursor_++;
  const auto it = frames_.find(index);
  if (it == frames_.end())
    throw SequenceGapError("sequence: missing frame index " + std::to_string(index) + " (" +
                           format_pattern(spec_.frame_pattern, index) + ") in " +
                           spec_.input_dir);
  SequenceItem item;
  item.index = index;
  item.frame = read_frame((fs::path(spec_.input_dir) / it->second).string());
  if (!spec_.groundtruth_dir.empty()) {
    const fs::path gt_path =
        fs::path(spec_.groundtruth_dir) / format_pattern(spec_.gt_pattern, index);
    std::error_code ec;
    if (fs::exists(gt_path, ec)) {
      GroundTruthFrame gt = decode_groundtruth(read_frame(gt_path.string()));
      if (roi_) apply_roi(gt, *roi_);
      item.gt = std::move(gt);
    }
  }
  return item;
}

}  // namespace cp3
