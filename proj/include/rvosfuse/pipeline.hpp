#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rvosfuse/fusion.hpp"
#include "rvosfuse/keyframe.hpp"
#include "rvosfuse/manifest.hpp"
#include "rvosfuse/metrics.hpp"
#include "rvosfuse/propagation.hpp"

namespace rvos {

/// Adapter command selecting the in-process identity propagator.
inline constexpr std::string_view kBuiltinIdentity = "builtin:identity";

struct PipelineConfig {
  std::filesystem::path dataset;
  std::filesystem::path predictions;
  /// Shell command of the adapter process, or kBuiltinIdentity.
  std::string adapter_cmd = std::string(kBuiltinIdentity);
  std::size_t n = 5;
  bool include_source_voter = true;
  bool post_process = true;
  std::optional<double> tolerance;
  std::filesystem::path out;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  /// Stage inputs for running stages separately.
  std::filesystem::path keyframes;
  std::filesystem::path candidates;
  std::filesystem::path fused;
  /// pseudo-label: labeled split to merge into and optional quality gate.
  std::filesystem::path labeled;
  double min_confidence = 0.0;
  bool inline_masks = false;
};

/// Applies `key = value` lines from a flat config file onto `config`.
/// Keys mirror the field names above; '#' starts a comment. Unknown keys
/// and malformed values throw Usage. `skip` lists keys that must not be
/// overwritten (they were given on the command line).
void ApplyConfigFile(const std::filesystem::path& file, PipelineConfig& config,
                     const std::vector<std::string>& skip = {});

/// Throws Usage unless N is within 1..9, jobs >= 1 and the numeric options are in range.
void ValidateConfig(const PipelineConfig& config);

/// Stable text form of the fields that affect outputs, and its FNV-1a hash.
std::string CanonicalConfig(const PipelineConfig& config);
std::string ConfigHash(const PipelineConfig& config);

struct KeyframeEntry {
  SequenceKey key;
  std::vector<KeyframeChoice> choices;

  friend bool operator==(const KeyframeEntry&, const KeyframeEntry&) = default;
};

/// Jobs in dataset expression order; every expression must have a
/// prediction (MissingPrediction otherwise).
std::vector<SequenceKey> JobOrder(const DatasetManifest& dataset,
                                  const PredictionManifest& predictions);

/// Top-min(n, T) frames per prediction, in job order.
std::vector<KeyframeEntry> ComputeKeyframes(const DatasetManifest& dataset,
                                            const PredictionManifest& predictions, std::size_t n);
Json KeyframesToJson(const std::vector<KeyframeEntry>& entries, std::size_t n);
std::vector<KeyframeEntry> ParseKeyframes(const Json& doc, const std::string& origin);

struct CandidateEntry {
  SequenceKey key;
  std::vector<KeyframeChoice> choices;
  std::vector<MaskSequence> candidates;
  std::optional<std::string> failure;
};

/// Propagates every entry's choices with a pool of `jobs` workers, each
/// owning its own propagator. Output is in `keyframes` order regardless of
/// scheduling. Candidate failures are recorded, not thrown.
std::vector<CandidateEntry> RunPropagation(const DatasetManifest& dataset,
                                           const PredictionManifest& predictions,
                                           const std::vector<KeyframeEntry>& keyframes,
                                           const PropagatorFactory& factory, std::size_t jobs);
Json CandidatesToJson(const std::vector<CandidateEntry>& entries, const DatasetManifest& dataset);
std::vector<CandidateEntry> ParseCandidates(const Json& doc, const DatasetManifest& dataset,
                                            const std::string& origin);

/// Fuses each prediction with its candidates, in candidate-entry order.
std::vector<MaskSequence> FuseAll(const DatasetManifest& dataset,
                                  const PredictionManifest& predictions,
                                  const std::vector<CandidateEntry>& candidates,
                                  const FusionOptions& options);

/// Scores predicted sequences against every annotation of `ground_truth`,
/// in annotation order. Throws MissingPrediction.
EvalReport EvaluateSequences(const std::vector<MaskSequence>& predicted,
                             const DatasetManifest& ground_truth,
                             std::optional<double> tolerance);

/// Propagator factory for the configured adapter command.
PropagatorFactory MakePropagatorFactory(const PipelineConfig& config,
                                        const DatasetManifest& dataset);

// Subcommands. Each writes into config.out and returns what it wrote.

struct EvaluateOutcome {
  EvalReport report;
  std::string table;
  std::string json;
};
/// `predictions` may be a prediction manifest, an archive or a mask tree.
EvaluateOutcome CmdEvaluate(const std::filesystem::path& predictions,
                            const std::filesystem::path& ground_truth,
                            std::optional<double> tolerance,
                            const std::filesystem::path& out);
std::filesystem::path CmdKeyframes(const PipelineConfig& config);
std::filesystem::path CmdPropagate(const PipelineConfig& config);
std::filesystem::path CmdFuse(const PipelineConfig& config);
std::filesystem::path CmdPseudoLabel(const PipelineConfig& config);
std::filesystem::path CmdPipeline(const PipelineConfig& config);

}  // namespace rvos
