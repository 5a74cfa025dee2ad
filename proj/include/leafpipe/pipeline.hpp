#pragma once

#include <optional>
#include <string>

#include "leafpipe/augment.hpp"
#include "leafpipe/dataprep.hpp"
#include "leafpipe/embed.hpp"
#include "leafpipe/ganloss.hpp"
#include "leafpipe/modeleval.hpp"
#include "leafpipe/types.hpp"

namespace leafpipe::pipeline {

struct PipelinePaths {
    std::string raw_manifest;
    std::string image_root;  // optional; overrides manifest-relative resolution
    std::string synthetic_manifest;
    std::string out_dir;
};

// One self-contained file fully determines a run; CLI flags may override the
// seed and output directory.
struct PipelineConfig {
    uint64_t master_seed = 0;
    PipelinePaths paths;
    int image_size = 256;
    dataprep::SplitSpec split;
    augment::AugmentationConfig augmentation;
    modeleval::TrainConfig train;
    embed::TsneConfig tsne;
    ganloss::GanLossWeights gan_weights;
    ganloss::GanTrainingConstants gan_recorded;

    void validate() const;
};

PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& config, const std::string& path);
std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const std::string& text, const std::string& base_dir);

// FNV-1a over the canonical JSON form of the effective config.
std::string config_digest(const PipelineConfig& config);

// Online augmentation selection: "none", "rotflip", one of the batched
// methods, or "rotflip+<method>". Throws ConfigError listing the valid names.
modeleval::OnlineAugSpec parse_aug_spec(const std::string& spec);

struct CommandOptions {
    std::string config_path;
    std::optional<uint64_t> seed_override;
    std::optional<std::string> out_override;
    std::string aug_spec = "none";        // train / eval-matrix
    std::string manifest_override;        // split/tsne/augment-preview input
    std::string features_csv;             // tsne: import external features
    std::string fixture_dir;              // gan-loss fixture directory
    std::string replay_path;              // augment-preview: event sidecar to replay
    int preview_count = 4;                // augment-preview batch size
};

// Exit codes shared by every subcommand:
//   0 success, 1 internal error, 2 configuration/usage error, 3 data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

int cmd_prepare(const CommandOptions& options);
int cmd_split(const CommandOptions& options);
int cmd_balance(const CommandOptions& options);
int cmd_resplit(const CommandOptions& options);
int cmd_train(const CommandOptions& options);
int cmd_eval_matrix(const CommandOptions& options);
int cmd_tsne(const CommandOptions& options);
int cmd_gan_loss(const CommandOptions& options);
int cmd_augment_preview(const CommandOptions& options);

}  // namespace leafpipe::pipeline
