#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "styletuner/toy_backbone.hpp"

namespace styletuner {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct CheckpointMeta {
    std::string stage = "init";  // init | stage1 | stage2
    int steps_completed = 0;
    std::string optimizer = "adam(beta1=0.9,beta2=0.999,eps=1e-8)";
    std::string base_fingerprint;  // pristine backbone before any training
};

// Versioned container: header {format_version, config, parameter-group
// manifest, span registry} followed by the named arrays as raw little-endian
// doubles. Write-then-read is bit-exact and carries no wall-clock state.
void save_checkpoint(const Backbone& backbone, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
    ToyModelConfig config;
    std::unique_ptr<Backbone> backbone;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace styletuner
