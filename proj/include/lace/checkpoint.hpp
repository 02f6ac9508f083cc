#pragma once

#include <filesystem>
#include <string>

#include "lace/model.hpp"
#include "lace/train.hpp"

namespace lace {

// Layout: the line "LACE-CHECKPOINT 1", one line of manifest JSON (config,
// graph hash, relation codes, encoder vocabularies, parameter names,
// shapes and offsets), then the raw little-endian doubles of every
// parameter in store order.
std::string checkpoint_bytes(const LaceModel& model, const TrainConfig& config);
void save_checkpoint(const LaceModel& model, const TrainConfig& config,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  TrainConfig config;
  LaceModel model;
};

// `graph` must be the graph the model was trained with (hash checked).
LoadedCheckpoint checkpoint_from_bytes(const std::string& bytes, const CorrelationGraph& graph);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const CorrelationGraph& graph);

}  // namespace lace
