#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rvosfuse/keyframe.hpp"
#include "rvosfuse/mask.hpp"
#include "rvosfuse/rle_record.hpp"

namespace rvos {

inline constexpr int kSchemaVersion = 1;

enum class Origin { kHuman, kPseudo };

std::string_view ToString(Origin origin);

/// An annotated frame is either an inline RLE record or a PNG path relative
/// to the manifest's directory.
using FrameSource = std::variant<RleMask, std::string>;

struct FrameBinding {
  std::string frame_name;
  FrameSource source;

  friend bool operator==(const FrameBinding&, const FrameBinding&) = default;
};

struct Annotation {
  std::string video_id;
  std::string expression_id;
  Origin origin = Origin::kHuman;
  std::vector<FrameBinding> frames;  // video frame order

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// One split of a dataset: its videos, referring expressions and optional
/// mask annotations.
struct DatasetManifest {
  std::vector<VideoRef> videos;
  std::vector<ExpressionRef> expressions;
  std::vector<Annotation> annotations;
  /// Directory PNG paths are resolved against. Not serialized.
  std::filesystem::path base_dir;

  const VideoRef* FindVideo(std::string_view video_id) const;
  /// Throws NotFound.
  const VideoRef& Video(std::string_view video_id) const;
  const Annotation* FindAnnotation(std::string_view video_id,
                                   std::string_view expression_id) const;

  /// Compares content, ignoring base_dir.
  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.videos == b.videos && a.expressions == b.expressions &&
           a.annotations == b.annotations;
  }
};

/// Checks ids are unique, expressions reference existing videos, texts are
/// non-empty and annotations reference existing frames with masks of the
/// video's size. Throws ParseError.
void ValidateDataset(const DatasetManifest& manifest);

DatasetManifest ParseDataset(const Json& doc, const std::string& origin);
Json DatasetToJson(const DatasetManifest& manifest);

/// `path` is either a manifest file or a directory holding manifest.json.
/// PNG bindings must name existing files. Throws NotFound or ParseError.
DatasetManifest ReadDataset(const std::filesystem::path& path);

/// Best-effort reader for the public MeViS `meta_expressions.json` layout
/// ({"videos": {id: {"frames": [...], "expressions": {id: {"exp": text}}}}}).
/// That layout carries no frame size, so per-video "width"/"height" are used
/// when present and `width`/`height` otherwise.
DatasetManifest ReadMevisMeta(const std::filesystem::path& path, int width, int height);

void WriteDataset(const DatasetManifest& manifest, const std::filesystem::path& file);

/// Decodes every frame of an annotation in video frame order. Throws
/// ParseError for missing frames or unreadable PNGs and DimensionMismatch
/// when a mask does not match the video.
MaskSequence LoadAnnotation(const DatasetManifest& manifest, const Annotation& annotation);

enum class TrackKind { kPerFrame, kBroadcast };

struct PredictionEntry {
  std::string video_id;
  std::string expression_id;
  ConfidenceTrack track;
  TrackKind track_kind = TrackKind::kPerFrame;
  std::vector<std::pair<std::string, RleMask>> frames;

  friend bool operator==(const PredictionEntry&, const PredictionEntry&) = default;
};

/// RVOS outputs: a mask sequence and confidence track per expression.
struct PredictionManifest {
  std::vector<PredictionEntry> entries;

  const PredictionEntry* Find(std::string_view video_id, std::string_view expression_id) const;

  friend bool operator==(const PredictionManifest&, const PredictionManifest&) = default;
};

/// Throws ParseError. Broadcast tracks must be constant.
PredictionManifest ParsePredictions(const Json& doc, const std::string& origin);
Json PredictionsToJson(const PredictionManifest& manifest);
PredictionManifest ReadPredictions(const std::filesystem::path& path);
void WritePredictions(const PredictionManifest& manifest, const std::filesystem::path& file);

/// Checks every entry against the dataset: known video and expression, one
/// mask per video frame, track length equal to the frame count, mask size
/// equal to the video size. Throws ParseError or DimensionMismatch.
void CheckPredictions(const PredictionManifest& predictions, const DatasetManifest& dataset);

/// Frames in video order. Throws MissingPrediction or DimensionMismatch.
MaskSequence EntrySequence(const PredictionEntry& entry, const VideoRef& video);

PredictionEntry MakePredictionEntry(const MaskSequence& sequence, const VideoRef& video,
                                    ConfidenceTrack track,
                                    TrackKind kind = TrackKind::kPerFrame);

/// Reads a whole file. Throws NotFound.
std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
/// Parses a JSON file, reporting the line and column of syntax errors.
Json ReadJsonFile(const std::filesystem::path& path);
/// Creates parent directories and replaces `path` atomically.
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace rvos
