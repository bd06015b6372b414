#include "energuard/models.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "energuard/nn/serialize.hpp"

namespace energuard::models {

using nlohmann::json;
using traceio::Dataset;
using traceio::EnergyTrace;
using traceio::Family;

std::vector<nn::LayerSpec> ad_layer_stack(const AdParams& p) {
  std::vector<nn::LayerSpec> layers;
  layers.push_back(nn::LayerSpec::conv1d(p.conv_filters.at(0), p.kernel_size));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::conv1d(p.conv_filters.at(1), p.kernel_size));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::maxpool1d(p.pool_size));
  layers.push_back(nn::LayerSpec::conv1d(p.conv_filters.at(2), p.kernel_size));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::maxpool1d(p.pool_size));
  layers.push_back(nn::LayerSpec::dropout(p.conv_dropout));
  layers.push_back(nn::LayerSpec::flatten());
  layers.push_back(nn::LayerSpec::dense(p.dense_units.at(0)));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::dropout(p.dense_dropout));
  layers.push_back(nn::LayerSpec::dense(p.dense_units.at(1)));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::dropout(p.dense_dropout));
  layers.push_back(nn::LayerSpec::dense(2));
  layers.push_back(nn::LayerSpec::softmax());
  return layers;
}

std::vector<nn::LayerSpec> ar_layer_stack(const ArParams& p) {
  std::vector<nn::LayerSpec> layers;
  layers.push_back(nn::LayerSpec::conv1d(p.conv_filters.at(0), p.kernel_size));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::conv1d(p.conv_filters.at(1), p.kernel_size));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::maxpool1d(p.pool_size));
  layers.push_back(nn::LayerSpec::conv1d(p.conv_filters.at(2), p.kernel_size));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::conv1d(p.conv_filters.at(3), p.kernel_size));
  layers.push_back(nn::LayerSpec::relu());
  layers.push_back(nn::LayerSpec::maxpool1d(p.pool_size));
  layers.push_back(nn::LayerSpec::dropout(p.conv_dropout));
  layers.push_back(nn::LayerSpec::flatten());
  for (std::size_t units : p.dense_units) {
    layers.push_back(nn::LayerSpec::dense(units));
    layers.push_back(nn::LayerSpec::relu());
  }
  layers.push_back(nn::LayerSpec::dense(traceio::attack_names().size()));
  layers.push_back(nn::LayerSpec::softmax());
  return layers;
}

nn::Network<float> build_ad(std::size_t n_samples, std::uint64_t seed, const AdParams& params) {
  return nn::Network<float>(ad_layer_stack(params), n_samples, 1, seed);
}

nn::Network<float> build_ar(std::size_t n_samples, std::uint64_t seed, const ArParams& params) {
  return nn::Network<float>(ar_layer_stack(params), n_samples, 1, seed);
}

int ad_class_of(const traceio::ClassLabel& label) {
  return label.family == Family::Attack ? 1 : 0;
}

std::vector<int> ad_labels(const Dataset& ds) {
  std::vector<int> out(ds.traces.size());
  for (std::size_t i = 0; i < ds.traces.size(); ++i) out[i] = ad_class_of(ds.traces[i].label);
  return out;
}

std::vector<int> ar_labels(const Dataset& ds) {
  std::vector<int> out(ds.traces.size());
  for (std::size_t i = 0; i < ds.traces.size(); ++i) {
    const auto& label = ds.traces[i].label;
    if (label.family != Family::Attack || !label.attack_index) {
      throw EmptyClass("trace " + std::to_string(i) + " (" + traceio::class_key(label) +
                       ") is not an attack trace; recognizer labels are attack-only");
    }
    out[i] = *label.attack_index;
  }
  return out;
}

Dataset attacks_only(const Dataset& ds) {
  Dataset out;
  for (const auto& t : ds.traces) {
    if (t.label.family == Family::Attack) out.add(t);
  }
  return out;
}

nn::Tensor<float> to_input_tensor(const Dataset& ds) {
  if (ds.traces.empty()) throw EmptyDataset("dataset has no traces");
  const std::size_t length = ds.traces.front().deltas.size();
  nn::Tensor<float> x({ds.traces.size(), length, 1});
  for (std::size_t i = 0; i < ds.traces.size(); ++i) {
    const auto& deltas = ds.traces[i].deltas;
    if (deltas.size() != length) {
      throw LengthMismatch("trace " + std::to_string(i) + " length " +
                           std::to_string(deltas.size()) + " differs from " +
                           std::to_string(length));
    }
    for (std::size_t j = 0; j < length; ++j) x.data[i * length + j] = static_cast<float>(deltas[j]);
  }
  return x;
}

namespace {

void check_lengths(const Dataset& ds, std::size_t n_samples, const char* which) {
  for (const auto& t : ds.traces) {
    if (t.deltas.size() != n_samples) {
      throw LengthMismatch(std::string(which) + " dataset not truncated to n_samples=" +
                           std::to_string(n_samples));
    }
  }
}

void require_all_attack_classes(const Dataset& ds) {
  std::set<int> present;
  for (const auto& t : ds.traces) {
    if (t.label.attack_index) present.insert(*t.label.attack_index);
  }
  if (present.size() != traceio::attack_names().size()) {
    std::string missing;
    for (std::size_t i = 0; i < traceio::attack_names().size(); ++i) {
      if (!present.count(static_cast<int>(i))) {
        if (!missing.empty()) missing += ", ";
        missing += traceio::attack_names()[i];
      }
    }
    throw EmptyClass("recognizer training set is missing attack classes: " + missing);
  }
}

}  // namespace

TrainOutput train_ad(const Dataset& train_std, const Dataset& val_std,
                     const traceio::Standardizer& standardizer, const TrainConfig& config) {
  check_lengths(train_std, config.n_samples, "train");
  check_lengths(val_std, config.n_samples, "val");

  TrainOutput out{TrainedModel{build_ad(config.n_samples, config.fit.seed, config.ad),
                               standardizer,
                               {"benign", "anomaly"},
                               "ad"},
                  {}};
  out.fit = nn::fit(out.model.net, to_input_tensor(train_std), ad_labels(train_std),
                    to_input_tensor(val_std), ad_labels(val_std),
                    nn::LossKind::BinaryCrossEntropy, config.fit);
  return out;
}

TrainOutput train_ar(const Dataset& train_std, const Dataset& val_std,
                     const traceio::Standardizer& standardizer, const TrainConfig& config) {
  const Dataset train_attacks = attacks_only(train_std);
  const Dataset val_attacks = attacks_only(val_std);
  if (train_attacks.traces.empty() || val_attacks.traces.empty()) {
    throw EmptyClass("recognizer training requires attack traces in train and val");
  }
  require_all_attack_classes(train_attacks);
  check_lengths(train_attacks, config.n_samples, "train");
  check_lengths(val_attacks, config.n_samples, "val");

  std::vector<std::string> names(traceio::attack_names().begin(), traceio::attack_names().end());
  TrainOutput out{TrainedModel{build_ar(config.n_samples, config.fit.seed, config.ar),
                               standardizer, std::move(names), "ar"},
                  {}};
  out.fit = nn::fit(out.model.net, to_input_tensor(train_attacks), ar_labels(train_attacks),
                    to_input_tensor(val_attacks), ar_labels(val_attacks),
                    nn::LossKind::CategoricalCrossEntropy, config.fit);
  return out;
}

TrainOutput run_ad_training(const Dataset& raw, const traceio::SplitSpec& split_spec,
                            const TrainConfig& config) {
  const Dataset cut = traceio::truncate(raw, config.n_samples);
  auto [train, val] = traceio::split(cut, split_spec);
  const traceio::Standardizer s = traceio::fit_standardizer(train);
  return train_ad(traceio::apply(s, train), traceio::apply(s, val), s, config);
}

TrainOutput run_ar_training(const Dataset& raw, const traceio::SplitSpec& split_spec,
                            const TrainConfig& config) {
  const Dataset cut = traceio::truncate(attacks_only(raw), config.n_samples);
  if (cut.traces.empty()) throw EmptyClass("dataset has no attack traces");
  auto [train, val] = traceio::split(cut, split_spec);
  const traceio::Standardizer s = traceio::fit_standardizer(train);
  return train_ar(traceio::apply(s, train), traceio::apply(s, val), s, config);
}

namespace {

nn::Tensor<float> standardized_input(TrainedModel& model, const EnergyTrace& trace) {
  if (trace.deltas.size() != model.net.input_length()) {
    throw LengthMismatch("trace length " + std::to_string(trace.deltas.size()) +
                         " does not match model input " +
                         std::to_string(model.net.input_length()));
  }
  const std::vector<double> std_deltas = traceio::apply(model.standardizer, trace.deltas);
  nn::Tensor<float> x({1, std_deltas.size(), 1});
  for (std::size_t i = 0; i < std_deltas.size(); ++i) x.data[i] = static_cast<float>(std_deltas[i]);
  return x;
}

}  // namespace

double infer_ad(TrainedModel& model, const EnergyTrace& trace) {
  const nn::Tensor<float> probs = model.net.forward(standardized_input(model, trace), false);
  return static_cast<double>(probs.data[1]);  // P(anomaly)
}

std::vector<double> infer_ar(TrainedModel& model, const EnergyTrace& trace) {
  const nn::Tensor<float> probs = model.net.forward(standardized_input(model, trace), false);
  std::vector<double> out(probs.data.begin(), probs.data.end());
  return out;
}

metrics::EvalReport evaluate_ad(TrainedModel& model, const Dataset& raw, double threshold,
                                const std::string& model_id) {
  if (raw.traces.empty()) throw EmptyDataset("evaluation dataset is empty");
  std::vector<int> truth;
  std::vector<int> predicted;
  std::vector<double> scores;
  for (const auto& trace : raw.traces) {
    const double score = infer_ad(model, trace);
    scores.push_back(score);
    predicted.push_back(score >= threshold ? 1 : 0);
    truth.push_back(ad_class_of(trace.label));
  }
  return metrics::build_report(truth, predicted, scores, 2, model.class_names, model_id,
                               model.net.input_length());
}

metrics::EvalReport evaluate_ar(TrainedModel& model, const Dataset& raw,
                                const std::string& model_id) {
  const Dataset attacks = attacks_only(raw);
  if (attacks.traces.empty()) throw EmptyDataset("evaluation dataset has no attack traces");
  std::vector<int> truth = ar_labels(attacks);
  std::vector<int> predicted;
  for (const auto& trace : attacks.traces) {
    const std::vector<double> dist = infer_ar(model, trace);
    predicted.push_back(
        static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin()));
  }
  return metrics::build_report(truth, predicted, {}, traceio::attack_names().size(),
                               model.class_names, model_id, model.net.input_length());
}

void save_model(TrainedModel& model, const std::filesystem::path& path) {
  json extra;
  extra["task"] = model.task;
  extra["class_names"] = model.class_names;
  extra["standardizer"] = {{"mean", model.standardizer.mean},
                           {"stddev", model.standardizer.stddev}};
  nn::write_model_file(nn::network_to_model_file(model.net, extra), path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  const nn::ModelFile file = nn::read_model_file(path);
  TrainedModel model{nn::network_from_model_file(file), traceio::Standardizer{},
                     file.header.value("class_names", std::vector<std::string>{}),
                     file.header.value("task", "")};
  if (file.header.contains("standardizer")) {
    model.standardizer.mean = file.header["standardizer"].value("mean", 0.0);
    model.standardizer.stddev = file.header["standardizer"].value("stddev", 1.0);
  }
  return model;
}

void write_history_csv(const nn::FitResult& fit, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "epoch,train_loss,val_loss,val_accuracy\n";
  char buf[128];
  for (const auto& e : fit.history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_loss,
                  e.val_accuracy);
    f << buf;
  }
}

}  // namespace energuard::models
