// rvosfuse: key-frame selection, bidirectional propagation, majority fusion,
// J/F evaluation and pseudo-label export for referring video segmentation.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rvosfuse/adapter.hpp"
#include "rvosfuse/error.hpp"
#include "rvosfuse/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string dataset;
  std::string predictions;
  std::string adapter_cmd;
  std::size_t n = 0;
  bool include_source_voter = true;
  bool no_post_process = false;
  double tolerance = -1.0;
  std::string out;
  std::size_t jobs = 0;
  std::uint64_t seed = 0;
  std::string config;
  std::string keyframes;
  std::string candidates;
  std::string fused;
  std::string labeled;
  double min_confidence = -1.0;
  bool inline_masks = false;
};

void AddCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--dataset", f.dataset, "Dataset manifest file or directory");
  cmd->add_option("--predictions", f.predictions, "Prediction manifest (RVOS masks + confidences)");
  cmd->add_option("--adapter-cmd", f.adapter_cmd,
                  "Propagation adapter command, or builtin:identity");
  cmd->add_option("--n", f.n, "Number of key frames to propagate from (1-9)");
  cmd->add_option("--include-source-voter", f.include_source_voter,
                  "Let the RVOS sequence vote in fusion (true/false)");
  cmd->add_flag("--no-post-process", f.no_post_process, "Skip fusion and emit the RVOS masks");
  cmd->add_option("--tolerance", f.tolerance, "Boundary tolerance in pixels (default: 0.8% of diagonal)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--jobs", f.jobs, "Parallel (video, expression) jobs");
  cmd->add_option("--seed", f.seed, "Seed passed to adapters as RVOSFUSE_SEED");
  cmd->add_option("--config", f.config, "Flat key = value config file");
}

rvos::PipelineConfig BuildConfig(CLI::App* cmd, const CommonFlags& f) {
  rvos::PipelineConfig config;
  std::vector<std::string> given;
  auto set = [&](const char* flag, const char* key) {
    if (cmd->get_option_no_throw(flag) != nullptr && cmd->count(flag) > 0) {
      given.emplace_back(key);
      return true;
    }
    return false;
  };
  if (set("--dataset", "dataset")) config.dataset = f.dataset;
  if (set("--predictions", "predictions")) config.predictions = f.predictions;
  if (set("--adapter-cmd", "adapter_cmd")) config.adapter_cmd = f.adapter_cmd;
  if (set("--n", "n")) config.n = f.n;
  if (set("--include-source-voter", "include_source_voter")) {
    config.include_source_voter = f.include_source_voter;
  }
  if (set("--no-post-process", "post_process")) config.post_process = false;
  if (set("--tolerance", "tolerance")) config.tolerance = f.tolerance;
  if (set("--out", "out")) config.out = f.out;
  if (set("--jobs", "jobs")) config.jobs = f.jobs;
  if (set("--seed", "seed")) config.seed = f.seed;
  if (set("--keyframes", "keyframes")) config.keyframes = f.keyframes;
  if (set("--candidates", "candidates")) config.candidates = f.candidates;
  if (set("--fused", "fused")) config.fused = f.fused;
  if (set("--labeled", "labeled")) config.labeled = f.labeled;
  if (set("--min-confidence", "min_confidence")) config.min_confidence = f.min_confidence;
  if (set("--inline-masks", "inline_masks")) config.inline_masks = true;
  if (!f.config.empty()) rvos::ApplyConfigFile(f.config, config, given);
  rvos::ValidateConfig(config);
  return config;
}

void RequirePath(const fs::path& p, const char* flag) {
  if (p.empty()) throw rvos::Error(rvos::ErrorCode::kUsage, std::string(flag) + " is required");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key-frame propagation, mask fusion and J&F evaluation for referring video "
               "object segmentation"};
  app.require_subcommand(1);
  CommonFlags f;

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against annotations");
  AddCommon(evaluate, f);
  bool json_out = false;
  evaluate->add_flag("--json", json_out, "Print the JSON report instead of the table");

  auto* keyframes = app.add_subcommand("keyframes", "Select top-N key frames per expression");
  AddCommon(keyframes, f);

  auto* propagate = app.add_subcommand("propagate", "Propagate masks from the key frames");
  AddCommon(propagate, f);
  propagate->add_option("--keyframes", f.keyframes, "keyframes.json from the keyframes stage");

  auto* fuse = app.add_subcommand("fuse", "Majority-vote fusion into a mask archive");
  AddCommon(fuse, f);
  fuse->add_option("--candidates", f.candidates, "candidates.json from the propagate stage");

  auto* pseudo = app.add_subcommand("pseudo-label", "Export fused masks as pseudo ground truth");
  AddCommon(pseudo, f);
  pseudo->add_option("--fused", f.fused, "Fused archive, mask tree or prediction manifest");
  pseudo->add_option("--labeled", f.labeled, "Labeled manifest to merge into");
  pseudo->add_option("--min-confidence", f.min_confidence,
                     "Drop expressions whose best frame score is below this");
  pseudo->add_flag("--inline-masks", f.inline_masks, "Store pseudo masks as inline RLE");

  auto* pipeline = app.add_subcommand("pipeline", "keyframes, propagate, fuse and evaluate");
  AddCommon(pipeline, f);

  auto* conformance =
      app.add_subcommand("conformance", "Check an adapter process against the wire protocol");
  AddCommon(conformance, f);
  bool expect_identity = false;
  conformance->add_flag("--expect-identity", expect_identity,
                        "Also require every returned mask to equal the key mask");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? rvos::kExitOk : rvos::kExitUsage;
  }

  try {
    if (*evaluate) {
      const rvos::PipelineConfig config = BuildConfig(evaluate, f);
      RequirePath(config.predictions, "--predictions");
      RequirePath(config.dataset, "--dataset");
      const auto outcome =
          rvos::CmdEvaluate(config.predictions, config.dataset, config.tolerance, config.out);
      std::cout << (json_out ? outcome.json : outcome.table);
    } else if (*keyframes) {
      std::cout << rvos::CmdKeyframes(BuildConfig(keyframes, f)).string() << '\n';
    } else if (*propagate) {
      std::cout << rvos::CmdPropagate(BuildConfig(propagate, f)).string() << '\n';
    } else if (*fuse) {
      std::cout << rvos::CmdFuse(BuildConfig(fuse, f)).string() << '\n';
    } else if (*pseudo) {
      std::cout << rvos::CmdPseudoLabel(BuildConfig(pseudo, f)).string() << '\n';
    } else if (*pipeline) {
      std::cout << rvos::CmdPipeline(BuildConfig(pipeline, f)).string() << '\n';
    } else if (*conformance) {
      const rvos::PipelineConfig config = BuildConfig(conformance, f);
      if (config.adapter_cmd == rvos::kBuiltinIdentity) {
        throw rvos::Error(rvos::ErrorCode::kUsage, "conformance needs --adapter-cmd");
      }
      rvos::AdapterOptions options;
      options.environment.push_back("RVOSFUSE_SEED=" + std::to_string(config.seed));
      bool ok = true;
      for (const auto& check : rvos::RunConformance(config.adapter_cmd, expect_identity, options)) {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name;
        if (!check.passed) std::cout << ": " << check.detail;
        std::cout << '\n';
        ok = ok && check.passed;
      }
      return ok ? rvos::kExitOk : rvos::kExitAdapter;
    }
  } catch (const rvos::Error& e) {
    std::cerr << "rvosfuse: " << e.what() << '\n';
    return rvos::ExitCodeFor(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "rvosfuse: " << e.what() << '\n';
    return rvos::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "rvosfuse: " << e.what() << '\n';
    return rvos::kExitFailure;
  }
  return rvos::kExitOk;
}
