#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "rvosfuse/manifest.hpp"
#include "rvosfuse/metrics.hpp"

namespace rvos {

/// Relative path of one frame's PNG: `<video_id>/<expression_id>/<frame>.png`.
std::string MaskEntryName(const VideoRef& video, const std::string& expression_id,
                          std::size_t frame);

/// Writes one PNG per frame under `out_root` using MaskEntryName. Returns
/// the written paths in frame order.
std::vector<std::filesystem::path> WriteMasks(const MaskSequence& sequence,
                                              const VideoRef& video,
                                              const std::filesystem::path& out_root);

/// Zip archive of all sequences in the MaskEntryName layout. Deterministic.
std::vector<std::uint8_t> BuildArchive(const std::vector<MaskSequence>& sequences,
                                       const DatasetManifest& dataset);
void WriteArchive(const std::vector<MaskSequence>& sequences, const DatasetManifest& dataset,
                  const std::filesystem::path& out);

using SequenceMap = std::map<SequenceKey, MaskSequence>;

/// Loads predicted sequences from a prediction manifest (.json), a zip
/// archive (.zip) or a directory in the archive layout. Only sequences whose
/// video is in `dataset` are returned; any such sequence must cover every
/// frame of its video.
SequenceMap ReadMaskSet(const std::filesystem::path& path, const DatasetManifest& dataset);

}  // namespace rvos
