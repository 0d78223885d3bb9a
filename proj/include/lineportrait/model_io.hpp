#pragma once

#include <string>
#include <vector>

#include "lineportrait/strokemodel.hpp"

namespace lineportrait {

/// A trained autoencoder together with the template strokes it was trained on.
/// Variations are drawn around the latent codes of these templates.
struct StrokeModel {
    ModelParams params;
    TrainConfig train_config;
    std::vector<StrokeGraph> templates;
};

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON: {"version", "dims", "weights", "train_config", "templates"}.
std::string model_to_json(const StrokeModel& model);
StrokeModel model_from_json(const std::string& text);

void save_model_file(const StrokeModel& model, const std::string& path);
StrokeModel load_model_file(const std::string& path);

}  // namespace lineportrait
