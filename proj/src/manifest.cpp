#include "rvosfuse/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "rvosfuse/error.hpp"
#include "rvosfuse/png.hpp"

namespace rvos {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void Bad(const std::string& origin, const std::string& what) {
  throw Error(ErrorCode::kParseError, origin + ": " + what);
}

const Json& Need(const Json& obj, const char* key, const std::string& origin,
                 const std::string& where) {
  if (!obj.is_object()) Bad(origin, where + " is not an object");
  const auto it = obj.find(key);
  if (it == obj.end()) Bad(origin, where + " lacks \"" + key + "\"");
  return *it;
}

std::string NeedString(const Json& obj, const char* key, const std::string& origin,
                       const std::string& where) {
  const Json& v = Need(obj, key, origin, where);
  if (!v.is_string()) Bad(origin, where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

int NeedPositiveInt(const Json& obj, const char* key, const std::string& origin,
                    const std::string& where) {
  const Json& v = Need(obj, key, origin, where);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
      v.get<std::int64_t>() > std::numeric_limits<int>::max()) {
    Bad(origin, where + ": \"" + key + "\" must be a positive integer");
  }
  return v.get<int>();
}

void CheckSchema(const Json& doc, const std::string& origin) {
  if (!doc.is_object()) Bad(origin, "document is not an object");
  const Json& schema = Need(doc, "schema", origin, "document");
  if (!schema.is_number_integer() || schema.get<std::int64_t>() != kSchemaVersion) {
    Bad(origin, "unsupported schema " + schema.dump());
  }
}

const Json& NeedArray(const Json& doc, const char* key, const std::string& origin) {
  const Json& v = Need(doc, key, origin, "document");
  if (!v.is_array()) Bad(origin, std::string("\"") + key + "\" must be an array");
  return v;
}

template <typename Fn>
auto Within(const std::string& origin, const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    Bad(origin, where + ": " + e.what());
  }
}

std::string Key(std::string_view video, std::string_view expression) {
  std::string k(video);
  k.push_back('\0');
  k.append(expression);
  return k;
}

}  // namespace

std::string_view ToString(Origin origin) {
  return origin == Origin::kHuman ? "human" : "pseudo";
}

const VideoRef* DatasetManifest::FindVideo(std::string_view video_id) const {
  for (const auto& v : videos) {
    if (v.video_id == video_id) return &v;
  }
  return nullptr;
}

const VideoRef& DatasetManifest::Video(std::string_view video_id) const {
  const VideoRef* v = FindVideo(video_id);
  if (v == nullptr) throw Error(ErrorCode::kNotFound, "unknown video " + std::string(video_id));
  return *v;
}

const Annotation* DatasetManifest::FindAnnotation(std::string_view video_id,
                                                  std::string_view expression_id) const {
  for (const auto& a : annotations) {
    if (a.video_id == video_id && a.expression_id == expression_id) return &a;
  }
  return nullptr;
}

namespace {

void Validate(const DatasetManifest& m, const std::string& origin) {
  std::set<std::string> video_ids;
  for (const auto& v : m.videos) {
    if (v.video_id.empty()) Bad(origin, "empty video id");
    if (!video_ids.insert(v.video_id).second) Bad(origin, "duplicate video " + v.video_id);
    if (v.width < 1 || v.height < 1) Bad(origin, "video " + v.video_id + " has no size");
    if (v.frame_names.empty()) Bad(origin, "video " + v.video_id + " has no frames");
    std::set<std::string> names(v.frame_names.begin(), v.frame_names.end());
    if (names.size() != v.frame_names.size()) {
      Bad(origin, "video " + v.video_id + " repeats a frame name");
    }
  }
  std::set<std::string> expression_keys;
  for (const auto& e : m.expressions) {
    if (e.expression_id.empty()) Bad(origin, "empty expression id in video " + e.video_id);
    if (video_ids.count(e.video_id) == 0) {
      Bad(origin, "expression " + e.expression_id + " references unknown video " + e.video_id);
    }
    if (e.text.empty()) Bad(origin, "expression " + e.expression_id + " has empty text");
    if (!expression_keys.insert(Key(e.video_id, e.expression_id)).second) {
      Bad(origin, "duplicate expression " + e.video_id + "/" + e.expression_id);
    }
  }
  std::set<std::string> annotation_keys;
  for (const auto& a : m.annotations) {
    const std::string where = "annotation " + a.video_id + "/" + a.expression_id;
    if (expression_keys.count(Key(a.video_id, a.expression_id)) == 0) {
      Bad(origin, where + " references an unknown expression");
    }
    if (!annotation_keys.insert(Key(a.video_id, a.expression_id)).second) {
      Bad(origin, "duplicate " + where);
    }
    const VideoRef& video = m.Video(a.video_id);
    std::size_t last = 0;
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
      const auto& binding = a.frames[i];
      const auto it =
          std::find(video.frame_names.begin(), video.frame_names.end(), binding.frame_name);
      if (it == video.frame_names.end()) {
        Bad(origin, where + " references unknown frame " + binding.frame_name);
      }
      const auto pos = static_cast<std::size_t>(it - video.frame_names.begin());
      if (i > 0 && pos <= last) Bad(origin, where + " lists frames out of video order");
      last = pos;
      if (const auto* rle = std::get_if<RleMask>(&binding.source)) {
        if (rle->width != video.width || rle->height != video.height) {
          throw Error(ErrorCode::kDimensionMismatch,
                      where + " frame " + binding.frame_name + " is " +
                          std::to_string(rle->width) + "x" + std::to_string(rle->height) +
                          ", video is " + std::to_string(video.width) + "x" +
                          std::to_string(video.height));
        }
      }
    }
  }
}

}  // namespace

void ValidateDataset(const DatasetManifest& m) {
  Validate(m, m.base_dir.empty() ? "dataset" : m.base_dir.string());
}

DatasetManifest ParseDataset(const Json& doc, const std::string& origin) {
  CheckSchema(doc, origin);
  DatasetManifest m;
  for (const Json& v : NeedArray(doc, "videos", origin)) {
    VideoRef ref;
    ref.video_id = NeedString(v, "id", origin, "video");
    const std::string where = "video " + ref.video_id;
    ref.width = NeedPositiveInt(v, "width", origin, where);
    ref.height = NeedPositiveInt(v, "height", origin, where);
    const Json& frames = Need(v, "frames", origin, where);
    if (!frames.is_array()) Bad(origin, where + ": \"frames\" must be an array");
    for (const Json& f : frames) {
      if (!f.is_string()) Bad(origin, where + ": frame names must be strings");
      ref.frame_names.push_back(f.get<std::string>());
    }
    m.videos.push_back(std::move(ref));
  }
  for (const Json& e : NeedArray(doc, "expressions", origin)) {
    ExpressionRef ref;
    ref.expression_id = NeedString(e, "id", origin, "expression");
    ref.video_id = NeedString(e, "video_id", origin, "expression " + ref.expression_id);
    ref.text = NeedString(e, "text", origin, "expression " + ref.expression_id);
    m.expressions.push_back(std::move(ref));
  }
  bool inline_only = false;
  if (const auto it = doc.find("masks_inline"); it != doc.end()) {
    if (!it->is_boolean()) Bad(origin, "\"masks_inline\" must be a boolean");
    inline_only = it->get<bool>();
  }
  if (const auto it = doc.find("annotations"); it != doc.end()) {
    if (!it->is_array()) Bad(origin, "\"annotations\" must be an array");
    for (const Json& a : *it) {
      Annotation ann;
      ann.video_id = NeedString(a, "video_id", origin, "annotation");
      ann.expression_id = NeedString(a, "expression_id", origin, "annotation");
      const std::string where = "annotation " + ann.video_id + "/" + ann.expression_id;
      const std::string tag = NeedString(a, "origin", origin, where);
      if (tag == "human") {
        ann.origin = Origin::kHuman;
      } else if (tag == "pseudo") {
        ann.origin = Origin::kPseudo;
      } else {
        Bad(origin, where + ": unknown origin \"" + tag + "\"");
      }
      const Json& frames = Need(a, "frames", origin, where);
      if (!frames.is_object()) Bad(origin, where + ": \"frames\" must be an object");
      for (const auto& [name, value] : frames.items()) {
        if (value.is_string()) {
          if (inline_only) Bad(origin, where + ": PNG binding in a masks_inline manifest");
          ann.frames.push_back({name, value.get<std::string>()});
        } else {
          ann.frames.push_back(
              {name, Within(origin, where + " frame " + name, [&] { return RleFromJson(value); })});
        }
      }
      m.annotations.push_back(std::move(ann));
    }
  }
  Validate(m, origin);
  return m;
}

Json DatasetToJson(const DatasetManifest& m) {
  Json doc;
  doc["schema"] = kSchemaVersion;
  bool all_inline = !m.annotations.empty();
  for (const auto& a : m.annotations) {
    for (const auto& f : a.frames) all_inline = all_inline && std::holds_alternative<RleMask>(f.source);
  }
  if (all_inline) doc["masks_inline"] = true;
  Json& videos = doc["videos"] = Json::array();
  for (const auto& v : m.videos) {
    Json rec;
    rec["id"] = v.video_id;
    rec["frames"] = v.frame_names;
    rec["width"] = v.width;
    rec["height"] = v.height;
    videos.push_back(std::move(rec));
  }
  Json& expressions = doc["expressions"] = Json::array();
  for (const auto& e : m.expressions) {
    Json rec;
    rec["id"] = e.expression_id;
    rec["video_id"] = e.video_id;
    rec["text"] = e.text;
    expressions.push_back(std::move(rec));
  }
  Json& annotations = doc["annotations"] = Json::array();
  for (const auto& a : m.annotations) {
    Json rec;
    rec["video_id"] = a.video_id;
    rec["expression_id"] = a.expression_id;
    rec["origin"] = std::string(ToString(a.origin));
    Json& frames = rec["frames"] = Json::object();
    for (const auto& f : a.frames) {
      if (const auto* rle = std::get_if<RleMask>(&f.source)) {
        frames[f.frame_name] = RleToJson(*rle);
      } else {
        frames[f.frame_name] = std::get<std::string>(f.source);
      }
    }
    annotations.push_back(std::move(rec));
  }
  return doc;
}

std::vector<std::uint8_t> ReadFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Json ReadJsonFile(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, bytes.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < offset; ++i) {
      if (bytes[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(line) + ":" +
                                            std::to_string(column) + ": invalid JSON");
  }
}

void WriteFileBytes(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kNotFound, "cannot create " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kNotFound, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

DatasetManifest ReadDataset(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kNotFound, path.string());
  const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  if (!fs::exists(file)) throw Error(ErrorCode::kNotFound, file.string());
  DatasetManifest m = ParseDataset(ReadJsonFile(file), file.string());
  m.base_dir = file.parent_path();
  for (const auto& a : m.annotations) {
    for (const auto& f : a.frames) {
      if (const auto* rel = std::get_if<std::string>(&f.source)) {
        const fs::path png = m.base_dir / *rel;
        if (!fs::is_regular_file(png)) {
          Bad(file.string(), "annotation " + a.video_id + "/" + a.expression_id + " frame " +
                                 f.frame_name + " references missing file " + png.string());
        }
      }
    }
  }
  return m;
}

DatasetManifest ReadMevisMeta(const fs::path& path, int width, int height) {
  const std::string origin = path.string();
  const Json doc = ReadJsonFile(path);
  const Json& videos = Need(doc, "videos", origin, "document");
  if (!videos.is_object()) Bad(origin, "\"videos\" must be an object");
  DatasetManifest m;
  m.base_dir = path.parent_path();
  for (const auto& [vid, rec] : videos.items()) {
    VideoRef ref;
    ref.video_id = vid;
    const std::string where = "video " + vid;
    ref.width = rec.contains("width") ? NeedPositiveInt(rec, "width", origin, where) : width;
    ref.height = rec.contains("height") ? NeedPositiveInt(rec, "height", origin, where) : height;
    if (ref.width < 1 || ref.height < 1) Bad(origin, where + ": frame size unknown");
    const Json& frames = Need(rec, "frames", origin, where);
    if (!frames.is_array()) Bad(origin, where + ": \"frames\" must be an array");
    for (const Json& f : frames) {
      if (!f.is_string()) Bad(origin, where + ": frame names must be strings");
      ref.frame_names.push_back(f.get<std::string>());
    }
    const Json& expressions = Need(rec, "expressions", origin, where);
    if (!expressions.is_object()) Bad(origin, where + ": \"expressions\" must be an object");
    for (const auto& [eid, exp] : expressions.items()) {
      m.expressions.push_back({eid, vid, NeedString(exp, "exp", origin, where + " expression " + eid)});
    }
    m.videos.push_back(std::move(ref));
  }
  Validate(m, origin);
  return m;
}

void WriteDataset(const DatasetManifest& manifest, const fs::path& file) {
  WriteFileBytes(file, DatasetToJson(manifest).dump() + "\n");
}

MaskSequence LoadAnnotation(const DatasetManifest& manifest, const Annotation& annotation) {
  const VideoRef& video = manifest.Video(annotation.video_id);
  const std::string where = "annotation " + annotation.video_id + "/" + annotation.expression_id;
  if (annotation.frames.size() != video.frame_count()) {
    throw Error(ErrorCode::kParseError, where + " covers " +
                                            std::to_string(annotation.frames.size()) + " of " +
                                            std::to_string(video.frame_count()) + " frames");
  }
  std::vector<BinaryMask> frames;
  frames.reserve(video.frame_count());
  for (std::size_t t = 0; t < video.frame_count(); ++t) {
    const FrameBinding& binding = annotation.frames[t];
    if (binding.frame_name != video.frame_names[t]) {
      throw Error(ErrorCode::kParseError, where + " frame " + std::to_string(t) + " is bound to " +
                                              binding.frame_name + ", expected " +
                                              video.frame_names[t]);
    }
    BinaryMask mask = [&] {
      if (const auto* rle = std::get_if<RleMask>(&binding.source)) return RleDecode(*rle);
      const fs::path png = manifest.base_dir / std::get<std::string>(binding.source);
      return DecodePng(ReadFileBytes(png), png.string());
    }();
    if (mask.width() != video.width || mask.height() != video.height) {
      throw Error(ErrorCode::kDimensionMismatch,
                  where + " frame " + binding.frame_name + " is " + std::to_string(mask.width()) +
                      "x" + std::to_string(mask.height()) + ", video is " +
                      std::to_string(video.width) + "x" + std::to_string(video.height));
    }
    frames.push_back(std::move(mask));
  }
  return MaskSequence(annotation.video_id, annotation.expression_id, std::move(frames));
}

const PredictionEntry* PredictionManifest::Find(std::string_view video_id,
                                                std::string_view expression_id) const {
  for (const auto& e : entries) {
    if (e.video_id == video_id && e.expression_id == expression_id) return &e;
  }
  return nullptr;
}

PredictionManifest ParsePredictions(const Json& doc, const std::string& origin) {
  CheckSchema(doc, origin);
  PredictionManifest m;
  std::set<std::string> keys;
  for (const Json& e : NeedArray(doc, "entries", origin)) {
    PredictionEntry entry;
    entry.video_id = NeedString(e, "video_id", origin, "entry");
    entry.expression_id = NeedString(e, "expression_id", origin, "entry");
    const std::string where = "entry " + entry.video_id + "/" + entry.expression_id;
    if (!keys.insert(Key(entry.video_id, entry.expression_id)).second) {
      Bad(origin, "duplicate " + where);
    }
    const Json& track = Need(e, "track", origin, where);
    if (!track.is_array()) Bad(origin, where + ": \"track\" must be an array");
    std::vector<double> scores;
    for (const Json& s : track) {
      if (!s.is_number()) Bad(origin, where + ": track values must be numbers");
      scores.push_back(s.get<double>());
    }
    entry.track = Within(origin, where, [&] { return ConfidenceTrack(std::move(scores)); });
    const std::string kind = NeedString(e, "track_kind", origin, where);
    if (kind == "per_frame") {
      entry.track_kind = TrackKind::kPerFrame;
    } else if (kind == "broadcast") {
      entry.track_kind = TrackKind::kBroadcast;
      const auto& s = entry.track.scores();
      if (std::adjacent_find(s.begin(), s.end(), std::not_equal_to<>()) != s.end()) {
        Bad(origin, where + ": broadcast track is not constant");
      }
    } else {
      Bad(origin, where + ": unknown track_kind \"" + kind + "\"");
    }
    const Json& frames = Need(e, "frames", origin, where);
    if (!frames.is_object()) Bad(origin, where + ": \"frames\" must be an object");
    for (const auto& [name, value] : frames.items()) {
      entry.frames.emplace_back(
          name, Within(origin, where + " frame " + name, [&] { return RleFromJson(value); }));
    }
    if (entry.frames.size() != entry.track.size()) {
      Bad(origin, where + ": " + std::to_string(entry.frames.size()) + " masks but " +
                      std::to_string(entry.track.size()) + " track values");
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

Json PredictionsToJson(const PredictionManifest& m) {
  Json doc;
  doc["schema"] = kSchemaVersion;
  Json& entries = doc["entries"] = Json::array();
  for (const auto& e : m.entries) {
    Json rec;
    rec["video_id"] = e.video_id;
    rec["expression_id"] = e.expression_id;
    rec["track"] = e.track.scores();
    rec["track_kind"] = e.track_kind == TrackKind::kPerFrame ? "per_frame" : "broadcast";
    Json& frames = rec["frames"] = Json::object();
    for (const auto& [name, rle] : e.frames) frames[name] = RleToJson(rle);
    entries.push_back(std::move(rec));
  }
  return doc;
}

PredictionManifest ReadPredictions(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::kNotFound, path.string());
  return ParsePredictions(ReadJsonFile(path), path.string());
}

void WritePredictions(const PredictionManifest& manifest, const fs::path& file) {
  WriteFileBytes(file, PredictionsToJson(manifest).dump() + "\n");
}

void CheckPredictions(const PredictionManifest& predictions, const DatasetManifest& dataset) {
  for (const auto& e : predictions.entries) {
    const std::string where = "prediction " + e.video_id + "/" + e.expression_id;
    const VideoRef* video = dataset.FindVideo(e.video_id);
    if (video == nullptr) {
      throw Error(ErrorCode::kParseError, where + " references unknown video");
    }
    const bool known = std::any_of(dataset.expressions.begin(), dataset.expressions.end(),
                                   [&](const ExpressionRef& x) {
                                     return x.video_id == e.video_id &&
                                            x.expression_id == e.expression_id;
                                   });
    if (!known) throw Error(ErrorCode::kParseError, where + " references unknown expression");
    if (e.track.size() != video->frame_count()) {
      throw Error(ErrorCode::kParseError, where + ": track has " + std::to_string(e.track.size()) +
                                              " values for " +
                                              std::to_string(video->frame_count()) + " frames");
    }
    EntrySequence(e, *video);
  }
}

MaskSequence EntrySequence(const PredictionEntry& entry, const VideoRef& video) {
  std::map<std::string_view, const RleMask*> by_name;
  for (const auto& [name, rle] : entry.frames) by_name.emplace(name, &rle);
  std::vector<BinaryMask> frames;
  frames.reserve(video.frame_count());
  for (const auto& name : video.frame_names) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorCode::kMissingPrediction,
                  entry.video_id + "/" + entry.expression_id + " has no mask for frame " + name);
    }
    if (it->second->width != video.width || it->second->height != video.height) {
      throw Error(ErrorCode::kDimensionMismatch,
                  entry.video_id + "/" + entry.expression_id + " frame " + name +
                      " does not match the video size");
    }
    frames.push_back(RleDecode(*it->second));
  }
  if (by_name.size() != video.frame_count()) {
    throw Error(ErrorCode::kParseError, entry.video_id + "/" + entry.expression_id +
                                            " has masks for frames outside the video");
  }
  return MaskSequence(entry.video_id, entry.expression_id, std::move(frames));
}

PredictionEntry MakePredictionEntry(const MaskSequence& sequence, const VideoRef& video,
                                    ConfidenceTrack track, TrackKind kind) {
  if (sequence.frame_count() != video.frame_count()) {
    throw Error(ErrorCode::kSequenceMismatch, sequence.video_id() + "/" +
                                                  sequence.expression_id() +
                                                  " does not cover its video");
  }
  PredictionEntry entry{sequence.video_id(), sequence.expression_id(), std::move(track), kind, {}};
  for (std::size_t t = 0; t < video.frame_count(); ++t) {
    entry.frames.emplace_back(video.frame_names[t], RleEncode(sequence.frame(t)));
  }
  return entry;
}

}  // namespace rvos
