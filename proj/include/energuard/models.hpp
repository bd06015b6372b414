#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "energuard/metrics.hpp"
#include "energuard/nn/network.hpp"
#include "energuard/nn/train.hpp"
#include "energuard/traceio.hpp"

namespace energuard::models {

// Detector stack: 3 conv (64/64/128, kernel 3), 2 max-pools of 10,
// 3 dense layers ending in a 2-way softmax, 3 dropout layers.
struct AdParams {
  std::vector<std::size_t> conv_filters{64, 64, 128};
  std::size_t kernel_size = 3;
  std::size_t pool_size = 10;
  std::vector<std::size_t> dense_units{128, 64};  // hidden widths
  double conv_dropout = 0.25;
  double dense_dropout = 0.5;
};

// Recognizer stack: 4 conv (64/64/128/128, kernel 3), pools after conv 2
// and conv 4, 4 dense layers ending in a 15-way softmax.
struct ArParams {
  std::vector<std::size_t> conv_filters{64, 64, 128, 128};
  std::size_t kernel_size = 3;
  std::size_t pool_size = 10;
  std::vector<std::size_t> dense_units{256, 128, 64};
  double conv_dropout = 0.25;
};

std::vector<nn::LayerSpec> ad_layer_stack(const AdParams& params = {});
std::vector<nn::LayerSpec> ar_layer_stack(const ArParams& params = {});

nn::Network<float> build_ad(std::size_t n_samples, std::uint64_t seed = 0,
                            const AdParams& params = {});
nn::Network<float> build_ar(std::size_t n_samples, std::uint64_t seed = 0,
                            const ArParams& params = {});

struct TrainConfig {
  std::size_t n_samples = 3000;  // input length; datasets must be truncated to this
  nn::FitConfig fit;
  AdParams ad;
  ArParams ar;
};

// A deployable model: network weights plus the training-time standardizer
// and class names, all persisted in one container file.
struct TrainedModel {
  nn::Network<float> net;
  traceio::Standardizer standardizer;
  std::vector<std::string> class_names;
  std::string task;  // "ad" | "ar"
};

struct TrainOutput {
  TrainedModel model;
  nn::FitResult fit;
};

// 0 = benign, 1 = anomaly.
int ad_class_of(const traceio::ClassLabel& label);
std::vector<int> ad_labels(const traceio::Dataset& ds);
std::vector<int> ar_labels(const traceio::Dataset& ds);  // attack_index
traceio::Dataset attacks_only(const traceio::Dataset& ds);

// (N, L, 1) float tensor of the trace deltas.
nn::Tensor<float> to_input_tensor(const traceio::Dataset& ds);

// Both train_* expect datasets already truncated to config.n_samples and
// standardized with `standardizer` (which is embedded into the model).
// train_ad collapses labels to benign/anomaly; train_ar keeps only attack
// traces and requires all 15 attack classes in the training set.
TrainOutput train_ad(const traceio::Dataset& train_std, const traceio::Dataset& val_std,
                     const traceio::Standardizer& standardizer, const TrainConfig& config);
TrainOutput train_ar(const traceio::Dataset& train_std, const traceio::Dataset& val_std,
                     const traceio::Standardizer& standardizer, const TrainConfig& config);

// Full pipeline on a raw dataset: truncate, split, fit standardizer on the
// training side only, standardize, train.
TrainOutput run_ad_training(const traceio::Dataset& raw, const traceio::SplitSpec& split_spec,
                            const TrainConfig& config);
TrainOutput run_ar_training(const traceio::Dataset& raw, const traceio::SplitSpec& split_spec,
                            const TrainConfig& config);

// Inference on a raw trace; the model applies its own standardizer.
double infer_ad(TrainedModel& model, const traceio::EnergyTrace& trace);
std::vector<double> infer_ar(TrainedModel& model, const traceio::EnergyTrace& trace);

// Evaluation over a raw dataset (truncated to the model input length by
// the caller); scores/argmax are computed in inference mode.
metrics::EvalReport evaluate_ad(TrainedModel& model, const traceio::Dataset& raw,
                                double threshold = 0.5, const std::string& model_id = "ad-cnn");
metrics::EvalReport evaluate_ar(TrainedModel& model, const traceio::Dataset& raw,
                                const std::string& model_id = "ar-cnn");

void save_model(TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

void write_history_csv(const nn::FitResult& fit, const std::filesystem::path& path);

}  // namespace energuard::models
