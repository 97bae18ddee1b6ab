#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "cp3/frame.hpp"
#include "cp3/image_io.hpp"

namespace cp3 {

// Describes one on-disk sequence in the changedetection.net layout: a
// directory of numbered input frames, an optional directory of numbered
// ground-truth frames, an optional spatial ROI mask, and an optional 1-based
// inclusive temporal ROI (0 means "unbounded on that side").
struct SequenceSpec {
  std::string input_dir;
  std::string groundtruth_dir;  // empty: no ground truth
  std::string roi_path;         // empty: no spatial ROI
  int first = 0;
  int last = 0;
  std::string frame_pattern = "in%06d.jpg";
  std::string gt_pattern = "gt%06d.png";
};

struct SequenceItem {
  int index = 0;  // 1-based frame number from the file name
  Frame frame;
  std::optional<GroundTruthFrame> gt;  // present when a ground-truth file exists
};

// Streams a sequence in ascending index order, decoding one frame per call,
// and never yields an index outside the temporal ROI. Single consumer.
class SequenceReader {
 public:
  explicit SequenceReader(SequenceSpec spec);

  // Next frame, or nullopt past the end. Throws SequenceGapError when an
  // index inside the resolved range has no file.
  std::optional<SequenceItem> next();

  int first_index() const { return first_; }
  int last_index() const { return last_; }
  int count() const { return last_ - first_ + 1; }
  const std::optional<LabelMask>& roi() const { return roi_; }

 private:
  SequenceSpec spec_;
  std::map<int, std::string> frames_;  // index -> file name
  std::optional<LabelMask> roi_;
  int first_ = 0;
  int last_ = 0;
  int cursor_ = 0;
};

// Reads "first last" (two ASCII integers) from a temporalROI.txt file.
std::pair<int, int> read_temporal_roi(const std::string& path);

// Expands a numeric file-name pattern ("in%06d.jpg") for one index, and its
// inverse; match returns nullopt when the name does not fit the pattern.
std::string format_pattern(const std::string& pattern, int index);
std::optional<int> match_pattern(const std::string& pattern, const std::string& name);

// Marks every ground-truth pixel that the ROI mask excludes as outside-ROI.
void apply_roi(GroundTruthFrame& gt, const LabelMask& roi);

}  // namespace cp3
