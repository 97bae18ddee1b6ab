// cp3 — pixel-pair background subtraction tool.
//
// Subcommands: train (build a model from the first frames of a sequence),
// run (detect foreground frame by frame, blind-updating the model),
// eval (score masks against ground truth), synth (generate test sequences).
//
// Exit codes: 0 success, 1 usage/configuration error, 2 data error
// (unreadable input, missing frames, incompatible model), 3 numeric failure.

#include <CLI11.hpp>

#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cp3/dataset.hpp"
#include "cp3/detect.hpp"
#include "cp3/eval.hpp"
#include "cp3/image_io.hpp"
#include "cp3/parallel.hpp"
#include "cp3/serialize.hpp"
#include "cp3/synth.hpp"
#include "cp3/train.hpp"
#include "cp3/version.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Thrown during command-line/config assembly; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parameter plumbing: defaults < config file < explicit CLI flags.

struct ParamCli {
  std::string config_path;
  std::map<std::string, std::string> overrides;  // param key -> raw value
  bool no_range_check = false;

  void add_options(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "flat key=value parameter file");
    cmd.add_flag("--no-range-check", no_range_check,
                 "disable the dynamic-range test (pair test only)");
    const auto bind = [this, &cmd](const std::string& flag, const std::string& key,
                                   const std::string& help) {
      cmd.add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
    };
    bind("--k-supports", "k_supports", "supporting pixels per target (K)");
    bind("--pf-threshold", "pf_threshold", "failing-fraction threshold (pf)");
    bind("--gauss-c", "gauss_c", "Mahalanobis gate C (pair fails when D^2 > C^2)");
    bind("--alpha", "alpha", "online update learning rate");
    bind("--candidate-multiplier", "candidate_multiplier", "candidate budget = multiplier * K");
    bind("--gamma-scale", "gamma_scale", "correlation threshold scale");
    bind("--gamma-floor", "gamma_floor", "correlation threshold floor");
    bind("--range-margin-lo", "range_margin_lo", "slack below the learned minimum");
    bind("--range-margin-hi", "range_margin_hi", "slack above the learned maximum");
    bind("--cov-epsilon", "cov_epsilon", "covariance ridge epsilon");
    bind("--seed", "seed", "root RNG seed");
    bind("--training-frames", "training_frames", "training window length");
  }

  // Bad keys or values in the config file / flags are the user's mistake, so
  // they surface as usage errors (exit 1), not data errors.
  cp3::ModelParams resolve() const {
    cp3::ModelParams params;
    if (!config_path.empty()) apply_config_file(params, config_path);
    try {
      for (const auto& [key, value] : overrides) cp3::apply_param(params, key, value);
      if (no_range_check) params.range_check_enabled = false;
      params.validate();
    } catch (const cp3::InvalidInputError& e) {
      throw UsageError(e.what());
    }
    return params;
  }

  static void apply_config_file(cp3::ModelParams& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    const auto trim = [](std::string s) {
      const auto is_space = [](unsigned char c) { return std::isspace(c); };
      while (!s.empty() && is_space(s.front())) s.erase(s.begin());
      while (!s.empty() && is_space(s.back())) s.pop_back();
      return s;
    };
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      const std::size_t eq = stripped.find('=');
      if (eq == std::string::npos)
        throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
      try {
        cp3::apply_param(params, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
      } catch (const cp3::InvalidInputError& e) {
        throw UsageError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Manifest: every command records its fully resolved configuration.

using KvList = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const std::string& path, const std::string& command,
                    const cp3::ModelParams* params, const KvList& extra) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw cp3::IoError(path + ": cannot write manifest");
  out << "# cp3 run manifest — rerun with these values to reproduce bit-exactly\n";
  out << "tool_version=" << cp3::kVersion << '\n';
  out << "model_format_version=" << cp3::kModelFormatVersion << '\n';
  out << "command=" << command << '\n';
  for (const auto& [k, v] : extra) out << k << '=' << v << '\n';
  if (params)
    for (const auto& [k, v] : cp3::params_to_map(*params)) out << k << '=' << v << '\n';
  if (!out.flush()) throw cp3::IoError(path + ": cannot write manifest");
}

// ---------------------------------------------------------------------------
// Shared sequence helpers.

const char* kPatternCandidates[] = {"in%06d.jpg", "in%06d.png", "in%06d.pgm", "in%06d.ppm"};

std::string detect_pattern(const std::string& dir) {
  for (const char* pattern : kPatternCandidates) {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      if (!entry.is_regular_file()) continue;
      if (cp3::match_pattern(pattern, entry.path().filename().string())) return pattern;
    }
  }
  throw cp3::InvalidInputError("no frames matching in%06d.{jpg,png,pgm,ppm} in " + dir +
                               " (use --pattern)");
}

std::map<int, std::string> scan_indices(const std::string& dir, const std::string& pattern) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw cp3::InvalidInputError("directory does not exist: " + dir);
  std::map<int, std::string> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (const std::optional<int> idx = cp3::match_pattern(pattern, name))
      found.emplace(*idx, (fs::path(dir) / name).string());
  }
  return found;
}

std::string list_indices(const std::vector<int>& indices) {
  std::string out;
  for (std::size_t i = 0; i < indices.size() && i < 10; ++i) {
    if (i) out += ", ";
    out += std::to_string(indices[i]);
  }
  if (indices.size() > 10) out += ", … (" + std::to_string(indices.size()) + " total)";
  return out;
}

// Reads the first `count` frames of a sequence (by ascending index).
std::vector<cp3::Frame> read_training_window(const std::string& dir, const std::string& pattern,
                                             int count) {
  cp3::SequenceSpec spec;
  spec.input_dir = dir;
  spec.frame_pattern = pattern;
  cp3::SequenceReader reader(spec);
  std::vector<cp3::Frame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(frames.size()) < count) {
    std::optional<cp3::SequenceItem> item = reader.next();
    if (!item) break;
    frames.push_back(std::move(item->frame));
  }
  if (static_cast<int>(frames.size()) < count)
    throw cp3::InsufficientDataError("sequence " + dir + " has " +
                                     std::to_string(frames.size()) +
                                     " frames; training window needs " + std::to_string(count));
  return frames;
}

cp3::ProgressFn row_progress(int total_rows) {
  const int step = std::max(1, total_rows / 10);
  return [step](int done, int total) {
    if (done % step == 0 || done == total)
      std::fprintf(stderr, "  trained %d/%d pixel rows\n", done, total);
  };
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string input_dir, pattern, model_path = "model.cp3m";
  ParamCli params;
  int threads = 0;
  int stride = 0;
};

int cmd_train(const TrainArgs& args) {
  const cp3::ModelParams params = args.params.resolve();
  const int threads = cp3::resolve_threads(args.threads);
  const std::string pattern =
      args.pattern.empty() ? detect_pattern(args.input_dir) : args.pattern;

  const auto decode_start = Clock::now();
  const std::vector<cp3::Frame> frames =
      read_training_window(args.input_dir, pattern, params.training_frames);
  const double decode_s = seconds_since(decode_start);

  std::printf("training on %zu frames (%dx%d, %d channel%s), %d thread%s\n", frames.size(),
              frames[0].width, frames[0].height, frames[0].channels,
              frames[0].channels == 1 ? "" : "s", threads, threads == 1 ? "" : "s");
  cp3::TrainTimings timings;
  const cp3::AnyModel model = cp3::train_any(frames, params, args.stride, threads,
                                             row_progress(frames[0].height), &timings);
  cp3::save_model_file(model, args.model_path);

  const int stride_used = args.stride > 0 ? args.stride
                                          : cp3::auto_stride(frames[0].width, frames[0].height);
  std::printf("timing: decode %.3f s | stats tensor %.3f s | correlation %.3f s | "
              "pair init %.3f s | train total %.3f s\n",
              decode_s, timings.tensor_s, timings.correlation_s, timings.init_s,
              timings.total_s);
  std::printf("model written to %s\n", args.model_path.c_str());

  write_manifest(args.model_path + ".manifest.txt", "train", &params,
                 {{"input", args.input_dir},
                  {"frame_pattern", pattern},
                  {"model", args.model_path},
                  {"stride", std::to_string(stride_used)},
                  {"threads", std::to_string(threads)}});
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string input_dir, pattern, output_dir;
  std::string model_path;       // empty: train first (default train-then-run flow)
  std::string save_model_path;  // empty: do not save the updated model
  std::string mask_ext = "png";
  ParamCli params;
  int threads = 0;
  int stride = 0;
  int first = 0, last = 0;
};

int cmd_run(const RunArgs& args) {
  const int threads = cp3::resolve_threads(args.threads);
  const std::string pattern =
      args.pattern.empty() ? detect_pattern(args.input_dir) : args.pattern;

  std::error_code ec;
  fs::create_directories(args.output_dir, ec);
  if (ec) throw cp3::IoError(args.output_dir + ": cannot create output directory");

  cp3::AnyModel model = [&]() -> cp3::AnyModel {
    if (!args.model_path.empty()) {
      cp3::AnyModel m = cp3::load_model_file(args.model_path);
      if (args.params.no_range_check) cp3::model_params(m).range_check_enabled = false;
      return m;
    }
    const cp3::ModelParams params = args.params.resolve();
    std::printf("no --model given: training on the first %d frames first\n",
                params.training_frames);
    const std::vector<cp3::Frame> window =
        read_training_window(args.input_dir, pattern, params.training_frames);
    return cp3::train_any(window, params, args.stride, threads,
                          row_progress(window[0].height));
  }();

  cp3::SequenceSpec spec;
  spec.input_dir = args.input_dir;
  spec.frame_pattern = pattern;
  spec.first = args.first;
  spec.last = args.last;
  if (args.model_path.empty() && args.first == 0) {
    // Implicit training consumed the window; detection starts right after it.
    cp3::SequenceSpec probe = spec;
    probe.first = 0;
    spec.first = cp3::SequenceReader(probe).first_index() +
                 cp3::model_params(model).training_frames;
  }
  cp3::SequenceReader reader(spec);

  const std::string mask_pattern = "bin%06d." + args.mask_ext;
  int processed = 0;
  double step_s = 0.0;
  const auto total_start = Clock::now();
  while (std::optional<cp3::SequenceItem> item = reader.next()) {
    const auto step_start = Clock::now();
    const cp3::LabelMask mask = cp3::step(model, item->frame, threads);
    step_s += seconds_since(step_start);
    cp3::write_mask(mask,
                    (fs::path(args.output_dir) / cp3::format_pattern(mask_pattern, item->index))
                        .string());
    ++processed;
  }
  const double total_s = seconds_since(total_start);
  if (processed == 0) {
    std::printf("no frames in range [%d, %d]\n", reader.first_index(), reader.last_index());
  } else {
    std::printf("%d masks written to %s\n", processed, args.output_dir.c_str());
    std::printf("throughput: step %.1f fps (%.3f s model time), end-to-end %.1f fps "
                "(%.3f s with decode+encode)\n",
                processed / step_s, step_s, processed / total_s, total_s);
  }
  if (!args.save_model_path.empty()) {
    cp3::save_model_file(model, args.save_model_path);
    std::printf("updated model written to %s\n", args.save_model_path.c_str());
  }

  const cp3::ModelParams& params = cp3::model_params(model);
  write_manifest((fs::path(args.output_dir) / "manifest.txt").string(), "run", &params,
                 {{"input", args.input_dir},
                  {"frame_pattern", pattern},
                  {"model", args.model_path.empty() ? "(trained in-process)" : args.model_path},
                  {"output", args.output_dir},
                  {"mask_pattern", mask_pattern},
                  {"first", std::to_string(reader.first_index())},
                  {"last", std::to_string(reader.last_index())},
                  {"threads", std::to_string(threads)}});
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string sequence_dir, mask_dir, list_path;
  std::string mask_pattern = "bin%06d.png";
  std::string gt_pattern = "gt%06d.png";
  std::string roi_path;
  std::string report_path = "cp3_report.txt";
  std::string name = "sequence";
  int first = 0, last = 0;
};

struct VideoScore {
  std::string name;
  cp3::ConfusionCounts counts;
  cp3::MetricsReport report;
};

VideoScore score_one(const EvalArgs& args) {
  const std::string gt_dir = (fs::path(args.sequence_dir) / "groundtruth").string();
  const std::map<int, std::string> gts = scan_indices(gt_dir, args.gt_pattern);
  const std::map<int, std::string> masks = scan_indices(args.mask_dir, args.mask_pattern);
  if (gts.empty()) throw cp3::InvalidInputError("no ground-truth frames in " + gt_dir);
  if (masks.empty()) throw cp3::InvalidInputError("no masks in " + args.mask_dir);

  int first = args.first, last = args.last;
  const std::string troi = (fs::path(args.sequence_dir) / "temporalROI.txt").string();
  std::error_code ec;
  if ((first == 0 || last == 0) && fs::exists(troi, ec)) {
    const auto [f, l] = cp3::read_temporal_roi(troi);
    if (first == 0) first = f;
    if (last == 0) last = l;
  }
  if (first == 0) first = masks.begin()->first;
  if (last == 0) last = masks.rbegin()->first;
  if (first > last) throw cp3::InvalidInputError("eval: empty frame range");

  std::optional<cp3::LabelMask> roi;
  std::string roi_path = args.roi_path;
  if (roi_path.empty()) {
    const std::string candidate = (fs::path(args.sequence_dir) / "ROI.png").string();
    if (fs::exists(candidate, ec)) roi_path = candidate;
  }
  if (!roi_path.empty()) roi = cp3::read_mask(roi_path);

  std::vector<int> missing_gt, missing_masks;
  for (int i = first; i <= last; ++i) {
    if (!gts.count(i)) missing_gt.push_back(i);
    if (!masks.count(i)) missing_masks.push_back(i);
  }
  if (!missing_gt.empty())
    throw cp3::SequenceGapError("missing ground truth for frame indices: " +
                                list_indices(missing_gt));
  if (!missing_masks.empty())
    throw cp3::SequenceGapError("missing masks for frame indices: " +
                                list_indices(missing_masks));

  cp3::ConfusionCounts counts;
  std::uint64_t remapped_total = 0;
  for (int i = first; i <= last; ++i) {
    std::uint64_t remapped = 0;
    cp3::GroundTruthFrame gt =
        cp3::decode_groundtruth(cp3::read_frame(gts.at(i)), &remapped);
    remapped_total += remapped;
    if (roi) cp3::apply_roi(gt, *roi);
    counts = cp3::accumulate(counts, cp3::read_mask(masks.at(i)), gt);
  }
  if (remapped_total > 0)
    std::fprintf(stderr, "note: %llu ground-truth pixels snapped to the nearest label level\n",
                 static_cast<unsigned long long>(remapped_total));

  VideoScore score;
  score.name = args.name;
  score.counts = counts;
  score.report = cp3::metrics(counts);
  return score;
}

int cmd_eval(const EvalArgs& args) {
  std::vector<VideoScore> scores;
  if (!args.list_path.empty()) {
    // List file: one "name sequence_dir mask_dir" per line.
    std::ifstream in(args.list_path);
    if (!in) throw UsageError("cannot open list file: " + args.list_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream is(line);
      EvalArgs one = args;
      one.list_path.clear();
      if (!(is >> one.name >> one.sequence_dir >> one.mask_dir))
        throw UsageError(args.list_path + ":" + std::to_string(line_no) +
                         ": expected 'name sequence_dir mask_dir'");
      one.first = one.last = 0;  // each video resolves its own temporal ROI
      scores.push_back(score_one(one));
    }
    if (scores.empty()) throw UsageError(args.list_path + ": no videos listed");
  } else {
    if (args.sequence_dir.empty() || args.mask_dir.empty())
      throw UsageError("eval needs --sequence and --masks (or --list)");
    scores.push_back(score_one(args));
  }

  std::vector<std::pair<std::string, cp3::MetricsReport>> rows;
  std::vector<cp3::MetricsReport> reports;
  for (const VideoScore& s : scores) {
    rows.emplace_back(s.name, s.report);
    reports.push_back(s.report);
  }
  if (scores.size() > 1) rows.emplace_back("overall", cp3::aggregate(reports));

  const std::string table = cp3::format_report_table(rows);
  std::fputs(table.c_str(), stdout);

  std::ostringstream file;
  file << table << '\n';
  for (const VideoScore& s : scores)
    file << '[' << s.name << "]\n" << cp3::format_report_kv(s.report, &s.counts) << '\n';
  if (scores.size() > 1)
    file << "[overall]\n" << cp3::format_report_kv(cp3::aggregate(reports)) << '\n';
  std::ofstream out(args.report_path, std::ios::trunc);
  if (!out) throw cp3::IoError(args.report_path + ": cannot write report");
  out << file.str();
  if (!out.flush()) throw cp3::IoError(args.report_path + ": cannot write report");
  std::printf("report written to %s\n", args.report_path.c_str());

  write_manifest(args.report_path + ".manifest.txt", "eval", nullptr,
                 {{"sequence", args.list_path.empty() ? args.sequence_dir : "(list)"},
                  {"masks", args.list_path.empty() ? args.mask_dir : "(list)"},
                  {"list", args.list_path},
                  {"mask_pattern", args.mask_pattern},
                  {"report", args.report_path}});
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string output_dir;
  std::string ext = "pgm";
  cp3::SceneSpec scene;
  std::vector<std::string> illumination, boxes, periodic, camouflage;
  std::string background = "flat";
  int eval_from = 0;
  int threads = 0;
};

std::map<std::string, std::string> parse_kv_list(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    if (!item.empty()) {
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos)
        kv[item] = "true";  // bare flag, e.g. "wrap" or "multiplicative"
      else
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    pos = comma + 1;
  }
  return kv;
}

class EventReader {
 public:
  EventReader(const std::string& kind, const std::string& text)
      : kind_(kind), kv_(parse_kv_list(text)) {}

  int get_int(const std::string& key, int fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    try {
      return std::stoi(it->second);
    } catch (const std::exception&) {
      throw UsageError(kind_ + ": bad integer for '" + key + "': " + it->second);
    }
  }

  double get_double(const std::string& key, double fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw UsageError(kind_ + ": bad number for '" + key + "': " + it->second);
    }
  }

  bool get_flag(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return false;
    used_.insert(key);
    return it->second == "true" || it->second == "1" || it->second == "on";
  }

  void finish() const {
    for (const auto& [key, _] : kv_)
      if (!used_.count(key)) throw UsageError(kind_ + ": unknown key '" + key + "'");
  }

 private:
  std::string kind_;
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

int cmd_synth(SynthArgs& args) {
  if (args.background == "flat")
    args.scene.background = cp3::BackgroundKind::Flat;
  else if (args.background == "gradient")
    args.scene.background = cp3::BackgroundKind::Gradient;
  else if (args.background == "two-region")
    args.scene.background = cp3::BackgroundKind::TwoRegion;
  else
    throw UsageError("unknown background '" + args.background +
                     "' (flat, gradient, two-region)");

  for (const std::string& text : args.illumination) {
    EventReader r("--illumination", text);
    cp3::IlluminationStep e;
    e.value = r.get_double("value", e.value);
    e.start = r.get_int("start", e.start);
    e.multiplicative = r.get_flag("multiplicative");
    r.finish();
    args.scene.illumination.push_back(e);
  }
  for (const std::string& text : args.boxes) {
    EventReader r("--box", text);
    cp3::MovingBox e;
    e.x0 = r.get_int("x", e.x0);
    e.y0 = r.get_int("y", e.y0);
    e.size = r.get_int("size", e.size);
    e.intensity = r.get_double("intensity", e.intensity);
    e.vx = r.get_int("vx", e.vx);
    e.vy = r.get_int("vy", e.vy);
    e.start = r.get_int("start", e.start);
    e.wrap = r.get_flag("wrap");
    r.finish();
    args.scene.boxes.push_back(e);
  }
  for (const std::string& text : args.periodic) {
    EventReader r("--periodic", text);
    cp3::PeriodicRegion e;
    e.x = r.get_int("x", e.x);
    e.y = r.get_int("y", e.y);
    e.w = r.get_int("w", e.w);
    e.h = r.get_int("h", e.h);
    e.amplitude = r.get_double("amplitude", e.amplitude);
    e.period = r.get_int("period", e.period);
    r.finish();
    args.scene.periodic.push_back(e);
  }
  for (const std::string& text : args.camouflage) {
    EventReader r("--camouflage", text);
    cp3::CamouflageBox e;
    e.x = r.get_int("x", e.x);
    e.y = r.get_int("y", e.y);
    e.w = r.get_int("w", e.w);
    e.h = r.get_int("h", e.h);
    e.offset = r.get_double("offset", e.offset);
    e.start = r.get_int("start", e.start);
    e.duration = r.get_int("duration", e.duration);
    r.finish();
    args.scene.camouflage.push_back(e);
  }

  try {
    args.scene.validate();
  } catch (const cp3::InvalidInputError& e) {
    throw UsageError(e.what());
  }

  const int threads = cp3::resolve_threads(args.threads);
  cp3::write_scene(args.scene, args.output_dir, args.ext, args.eval_from, threads);
  std::printf("wrote %d frames (%dx%d, %d channel%s) to %s\n", args.scene.frame_count,
              args.scene.width, args.scene.height, args.scene.channels,
              args.scene.channels == 1 ? "" : "s", args.output_dir.c_str());

  KvList extra = {{"output", args.output_dir},
                  {"ext", args.ext},
                  {"width", std::to_string(args.scene.width)},
                  {"height", std::to_string(args.scene.height)},
                  {"frames", std::to_string(args.scene.frame_count)},
                  {"channels", std::to_string(args.scene.channels)},
                  {"seed", std::to_string(args.scene.seed)},
                  {"background", args.background},
                  {"base_level", std::to_string(args.scene.base_level)},
                  {"noise_sigma", std::to_string(args.scene.noise_sigma)},
                  {"eval_from", std::to_string(args.eval_from)}};
  for (const std::string& s : args.illumination) extra.emplace_back("illumination", s);
  for (const std::string& s : args.boxes) extra.emplace_back("box", s);
  for (const std::string& s : args.periodic) extra.emplace_back("periodic", s);
  for (const std::string& s : args.camouflage) extra.emplace_back("camouflage", s);
  write_manifest((fs::path(args.output_dir) / "manifest.txt").string(), "synth", nullptr,
                 extra);
  return 0;
}

int classify_error_exit(const std::exception& e) {
  const std::string what = e.what();
  if (what.find("non-finite") != std::string::npos) return 3;  // numeric failure
  return 2;                                                    // data error
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cp3 — pixel-pair background subtraction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("cp3 ") + cp3::kVersion);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "build a background model");
  train_cmd->add_option("--input", train_args.input_dir, "sequence input directory")
      ->required();
  train_cmd->add_option("--pattern", train_args.pattern,
                        "frame name pattern (default: auto-detect in%06d.*)");
  train_cmd->add_option("--model", train_args.model_path, "output model path");
  train_cmd->add_option("--threads", train_args.threads, "worker threads (0 = auto)");
  train_cmd->add_option("--stride", train_args.stride, "candidate grid stride (0 = auto)");
  train_args.params.add_options(*train_cmd);

  RunArgs run_args;
  CLI::App* run_cmd = app.add_subcommand("run", "detect foreground, updating the model");
  run_cmd->add_option("--input", run_args.input_dir, "sequence input directory")->required();
  run_cmd->add_option("--pattern", run_args.pattern, "frame name pattern");
  run_cmd->add_option("--output", run_args.output_dir, "mask output directory")->required();
  run_cmd->add_option("--model", run_args.model_path,
                      "trained model (omit to train on the window first)");
  run_cmd->add_option("--save-model", run_args.save_model_path,
                      "write the updated model here afterwards");
  run_cmd->add_option("--mask-ext", run_args.mask_ext, "mask format: png or pgm")
      ->check(CLI::IsMember({"png", "pgm"}));
  run_cmd->add_option("--first", run_args.first, "first frame index to process");
  run_cmd->add_option("--last", run_args.last, "last frame index to process");
  run_cmd->add_option("--threads", run_args.threads, "worker threads (0 = auto)");
  run_cmd->add_option("--stride", run_args.stride, "candidate stride for implicit training");
  run_args.params.add_options(*run_cmd);

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score masks against ground truth");
  eval_cmd->add_option("--sequence", eval_args.sequence_dir,
                       "sequence directory (with groundtruth/ and temporalROI.txt)");
  eval_cmd->add_option("--masks", eval_args.mask_dir, "directory of detection masks");
  eval_cmd->add_option("--list", eval_args.list_path,
                       "file of 'name sequence_dir mask_dir' lines");
  eval_cmd->add_option("--mask-pattern", eval_args.mask_pattern, "mask name pattern");
  eval_cmd->add_option("--gt-pattern", eval_args.gt_pattern, "ground-truth name pattern");
  eval_cmd->add_option("--roi", eval_args.roi_path, "spatial ROI mask image");
  eval_cmd->add_option("--report", eval_args.report_path, "report output path");
  eval_cmd->add_option("--name", eval_args.name, "video name in the report");
  eval_cmd->add_option("--first", eval_args.first, "first evaluated frame index");
  eval_cmd->add_option("--last", eval_args.last, "last evaluated frame index");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic sequence");
  synth_cmd->add_option("--output", synth_args.output_dir, "scene output directory")
      ->required();
  synth_cmd->add_option("--width", synth_args.scene.width, "frame width");
  synth_cmd->add_option("--height", synth_args.scene.height, "frame height");
  synth_cmd->add_option("--frames", synth_args.scene.frame_count, "frame count");
  synth_cmd->add_option("--channels", synth_args.scene.channels, "1 or 3");
  synth_cmd->add_option("--seed", synth_args.scene.seed, "scene RNG seed");
  synth_cmd->add_option("--background", synth_args.background, "flat | gradient | two-region");
  synth_cmd->add_option("--base-level", synth_args.scene.base_level, "background intensity");
  synth_cmd->add_option("--noise-sigma", synth_args.scene.noise_sigma, "Gaussian noise sigma");
  synth_cmd->add_option("--ext", synth_args.ext, "frame format: pgm, ppm, or png")
      ->check(CLI::IsMember({"pgm", "ppm", "png"}));
  synth_cmd->add_option("--eval-from", synth_args.eval_from,
                        "first evaluated frame (1-based) for temporalROI.txt");
  synth_cmd->add_option("--threads", synth_args.threads, "worker threads (0 = auto)");
  synth_cmd->add_option("--illumination", synth_args.illumination,
                        "value=30,start=150[,multiplicative] (repeatable)");
  synth_cmd->add_option("--box", synth_args.boxes,
                        "x=,y=,size=,intensity=,vx=,vy=,start=[,wrap] (repeatable)");
  synth_cmd->add_option("--periodic", synth_args.periodic,
                        "x=,y=,w=,h=,amplitude=,period= (repeatable)");
  synth_cmd->add_option("--camouflage", synth_args.camouflage,
                        "x=,y=,w=,h=,offset=,start=,duration= (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (synth_cmd->parsed()) return cmd_synth(synth_args);
    return 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const cp3::InvalidInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify_error_exit(e);
  } catch (const cp3::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
