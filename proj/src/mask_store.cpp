#include "rvosfuse/mask_store.hpp"

#include <algorithm>
#include <optional>

#include "rvosfuse/archive.hpp"
#include "rvosfuse/error.hpp"
#include "rvosfuse/png.hpp"

namespace rvos {
namespace fs = std::filesystem;

namespace {

// Groups `<video>/<expression>/<frame>.png` entries into sequences.
class SequenceAssembler {
 public:
  explicit SequenceAssembler(const DatasetManifest& dataset) : dataset_(dataset) {}

  void Add(const std::string& name, std::span<const std::uint8_t> png, const std::string& origin) {
    const auto first = name.find('/');
    const auto second = first == std::string::npos ? first : name.find('/', first + 1);
    if (second == std::string::npos || name.find('/', second + 1) != std::string::npos ||
        name.size() < 4 || name.compare(name.size() - 4, 4, ".png") != 0) {
      return;  // not part of the layout
    }
    const std::string video_id = name.substr(0, first);
    const std::string expression_id = name.substr(first + 1, second - first - 1);
    const std::string frame = name.substr(second + 1, name.size() - second - 5);
    const VideoRef* video = dataset_.FindVideo(video_id);
    if (video == nullptr) return;
    const auto it = std::find(video->frame_names.begin(), video->frame_names.end(), frame);
    if (it == video->frame_names.end()) {
      throw Error(ErrorCode::kParseError,
                  origin + ": " + name + " is not a frame of video " + video_id);
    }
    auto& slots = pending_[SequenceKey{video_id, expression_id}];
    slots.resize(video->frame_count());
    slots[static_cast<std::size_t>(it - video->frame_names.begin())] =
        DecodePng(png, origin + ":" + name);
  }

  SequenceMap Finish(const std::string& origin) {
    SequenceMap out;
    for (auto& [key, slots] : pending_) {
      const VideoRef& video = dataset_.Video(key.video_id);
      std::vector<BinaryMask> frames;
      for (std::size_t t = 0; t < slots.size(); ++t) {
        if (!slots[t]) {
          throw Error(ErrorCode::kMissingPrediction, origin + ": " + key.video_id + "/" +
                                                         key.expression_id + " lacks frame " +
                                                         video.frame_names[t]);
        }
        if (slots[t]->width() != video.width || slots[t]->height() != video.height) {
          throw Error(ErrorCode::kDimensionMismatch,
                      origin + ": " + key.video_id + "/" + key.expression_id + " frame " +
                          video.frame_names[t] + " does not match the video size");
        }
        frames.push_back(std::move(*slots[t]));
      }
      out.emplace(key, MaskSequence(key.video_id, key.expression_id, std::move(frames)));
    }
    return out;
  }

 private:
  const DatasetManifest& dataset_;
  std::map<SequenceKey, std::vector<std::optional<BinaryMask>>> pending_;
};

}  // namespace

std::string MaskEntryName(const VideoRef& video, const std::string& expression_id,
                          std::size_t frame) {
  return video.video_id + "/" + expression_id + "/" + video.frame_names.at(frame) + ".png";
}

std::vector<fs::path> WriteMasks(const MaskSequence& sequence, const VideoRef& video,
                                 const fs::path& out_root) {
  if (sequence.frame_count() != video.frame_count()) {
    throw Error(ErrorCode::kSequenceMismatch,
                sequence.video_id() + "/" + sequence.expression_id() + " does not cover its video");
  }
  std::vector<fs::path> written;
  for (std::size_t t = 0; t < sequence.frame_count(); ++t) {
    const fs::path path = out_root / MaskEntryName(video, sequence.expression_id(), t);
    const auto png = EncodePng(sequence.frame(t));
    WriteFileBytes(path, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
    written.push_back(path);
  }
  return written;
}

std::vector<std::uint8_t> BuildArchive(const std::vector<MaskSequence>& sequences,
                                       const DatasetManifest& dataset) {
  std::vector<ArchiveEntry> entries;
  for (const MaskSequence& s : sequences) {
    const VideoRef& video = dataset.Video(s.video_id());
    if (s.frame_count() != video.frame_count()) {
      throw Error(ErrorCode::kSequenceMismatch,
                  s.video_id() + "/" + s.expression_id() + " does not cover its video");
    }
    for (std::size_t t = 0; t < s.frame_count(); ++t) {
      entries.push_back({MaskEntryName(video, s.expression_id(), t), EncodePng(s.frame(t))});
    }
  }
  return BuildZip(std::move(entries));
}

void WriteArchive(const std::vector<MaskSequence>& sequences, const DatasetManifest& dataset,
                  const fs::path& out) {
  const auto bytes = BuildArchive(sequences, dataset);
  WriteFileBytes(out, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

SequenceMap ReadMaskSet(const fs::path& path, const DatasetManifest& dataset) {
  if (!fs::exists(path)) throw Error(ErrorCode::kNotFound, path.string());
  const std::string origin = path.string();
  if (fs::is_directory(path)) {
    SequenceAssembler assembler(dataset);
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const std::string rel = fs::relative(file, path).generic_string();
      assembler.Add(rel, ReadFileBytes(file), origin);
    }
    return assembler.Finish(origin);
  }
  if (path.extension() == ".json") {
    const PredictionManifest predictions = ReadPredictions(path);
    SequenceMap out;
    for (const auto& e : predictions.entries) {
      const VideoRef* video = dataset.FindVideo(e.video_id);
      if (video == nullptr) continue;
      out.emplace(SequenceKey{e.video_id, e.expression_id}, EntrySequence(e, *video));
    }
    return out;
  }
  const auto bytes = ReadFileBytes(path);
  SequenceAssembler assembler(dataset);
  for (const auto& entry : ReadZip(bytes, origin)) assembler.Add(entry.name, entry.data, origin);
  return assembler.Finish(origin);
}

}  // namespace rvos
