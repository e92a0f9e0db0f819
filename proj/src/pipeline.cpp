#include "ndk/pipeline.hpp"

#include "ndk/detrend.hpp"
#include "ndk/error.hpp"
#include "ndk/graphmetrics.hpp"
#include "ndk/synth.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace ndk {
namespace {

std::filesystem::path sibling(const std::filesystem::path& path, const char* extension) {
  auto p = path;
  p.replace_extension(extension);
  return p;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Dataset load_any(const std::filesystem::path& path) { return load_dataset(path, detect_format(path)); }

std::vector<std::size_t> select_samples(const Dataset& data, const std::optional<std::string>& id) {
  std::vector<std::size_t> rows;
  for (std::size_t l = 0; l < data.size(); ++l)
    if (!id || data[l].sample_id == *id) rows.push_back(l);
  if (id && rows.empty()) throw ValidationError("no sample with id " + *id);
  return rows;
}

}  // namespace

Extraction extract_features(const Dataset& data, const PipelineConfig& config, const FpcaBasis* basis,
                            std::size_t workers) {
  config.validate();
  Extraction out;
  out.features = feature_rows(data);
  if (config.features.variance) out.features = hconcat(out.features, variance_features(data));
  if (config.features.fpca) {
    if (basis) {
      if (basis->sensor_names != data.sensor_names()) {
        throw ValidationError("FPCA basis was fit on a different sensor layout");
      }
      out.basis = *basis;
    } else {
      const Dataset train = data.labelled();
      if (train.size() < 2) throw ValidationError("FPCA needs at least 2 labelled recordings to fit a basis");
      out.basis = fit_fpca(train, config.fpca_fve, workers);
    }
    out.features = hconcat(out.features, fpca_features(*out.basis, data));
  }
  if (config.features.tda) out.features = hconcat(out.features, tda_features(data, config.tda, workers));
  if (config.features.network) {
    out.features = hconcat(out.features, network_features(data, config.network, workers));
  }
  out.features.validate();
  return out;
}

void cmd_synth(const SynthOptions& options, const std::filesystem::path& out) {
  const auto spec = benchmark_spec(options.sensors, options.timepoints, options.samples, options.classes,
                                   options.second_domain);
  save_dataset(synth_dataset(spec, options.seed), out, options.format);
}

FeatureMatrix cmd_extract(const std::filesystem::path& dataset, const std::filesystem::path& config,
                          const std::filesystem::path& out, const std::optional<std::filesystem::path>& basis_in,
                          std::size_t workers) {
  const auto cfg = load_config(config);
  const Dataset data = load_any(dataset);
  std::optional<FpcaBasis> given;
  if (basis_in) given = load_basis(*basis_in);
  auto extraction = extract_features(data, cfg, given ? &*given : nullptr, workers);
  write_features_csv(extraction.features, out);
  if (extraction.basis && !basis_in) save_basis(*extraction.basis, sibling(out, ".basis"));
  return std::move(extraction.features);
}

CvResult cmd_cv(const std::filesystem::path& features, const std::filesystem::path& config,
                const std::filesystem::path& out_dir, std::size_t workers) {
  const auto cfg = load_config(config);
  const FeatureMatrix fm = read_features_csv(features);
  CvResult result = nested_cv(fm, cfg.cv, workers);
  std::filesystem::create_directories(out_dir);
  write_error_table(result, out_dir / "errors.csv");
  write_fold_audit(result, fm, out_dir / "folds.csv");

  nlohmann::ordered_json manifest;
  manifest["seed"] = cfg.cv.seed;
  manifest["best_alpha"] = result.best_alpha;
  manifest["best_lambda"] = result.best_lambda;
  manifest["lambda_path_length"] = cfg.cv.lambda_path_length;
  manifest["alpha_grid"] = cfg.cv.alpha_grid;
  manifest["alpha_error"] = result.alpha_error;
  manifest["samples"] = fm.rows();
  manifest["features"] = fm.cols();
  manifest["config"] = format_config(cfg);
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + (out_dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  return result;
}

TrainChoice read_cv_choice(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ValidationError("cannot open " + manifest.string());
  try {
    const auto j = nlohmann::json::parse(in);
    TrainChoice c;
    c.alpha = j.at("best_alpha").get<double>();
    c.lambda = j.at("best_lambda").get<double>();
    c.lambda_path_length = j.at("lambda_path_length").get<int>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
}

FitModel cmd_train(const std::filesystem::path& features, const TrainChoice& choice,
                   const std::filesystem::path& model_out) {
  const FeatureMatrix fm = read_features_csv(features);
  ElasticNetConfig cfg;
  cfg.alpha = choice.alpha;
  cfg.lambda = choice.lambda;
  cfg.lambda_path_length = choice.lambda_path_length;
  FitModel model = fit(fm, cfg);
  save_model(model, model_out);
  write_model_csv(model, sibling(model_out, ".csv"));
  return model;
}

void cmd_predict(const std::filesystem::path& model_path, const std::filesystem::path& features,
                 const std::filesystem::path& out) {
  const FitModel model = load_model(model_path);
  const FeatureMatrix fm = read_features_csv(features);
  if (fm.column_names != model.column_names) {
    throw ValidationError("feature columns of " + features.string() + " do not match the model");
  }
  const auto prob = predict_probabilities(model, fm.values);
  const auto cls = predict_classes(model, fm.values);
  std::ofstream o(out, std::ios::trunc);
  if (!o) throw ValidationError("cannot write " + out.string());
  o << "sample_id,predicted_class";
  for (int k = 1; k <= model.class_count(); ++k) o << ",p" << k;
  o << '\n';
  for (Eigen::Index l = 0; l < fm.rows(); ++l) {
    o << fm.sample_ids[static_cast<std::size_t>(l)] << ',' << cls[static_cast<std::size_t>(l)];
    for (Eigen::Index k = 0; k < prob.cols(); ++k) o << ',' << format_double(prob(l, k));
    o << '\n';
  }
}

Evaluation cmd_evaluate(const std::filesystem::path& predictions, const std::filesystem::path& labels,
                        const std::filesystem::path& out) {
  const FeatureMatrix fm = read_features_csv(labels);
  std::map<std::string, int> truth_of;
  for (std::size_t l = 0; l < fm.sample_ids.size(); ++l)
    if (fm.labels[l]) truth_of[fm.sample_ids[l]] = *fm.labels[l];

  std::ifstream in(predictions);
  if (!in) throw ValidationError("cannot open " + predictions.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(predictions.string() + " is empty");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "sample_id" || header[1] != "predicted_class") {
    throw ValidationError(predictions.string() + ": expected header sample_id,predicted_class,p1..pK");
  }
  const int K = static_cast<int>(header.size()) - 2;
  std::vector<int> predicted, truth;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ValidationError(predictions.string() + " line " + std::to_string(row) + ": wrong number of fields");
    }
    const auto it = truth_of.find(cells[0]);
    if (it == truth_of.end()) throw ValidationError("no label for sample " + cells[0]);
    predicted.push_back(static_cast<int>(parse_double(cells[1])));
    truth.push_back(it->second);
  }
  Evaluation e = evaluate_predictions(predicted, truth, K);
  write_confusion_csv(e, out);
  return e;
}

void cmd_dump_diagrams(const std::filesystem::path& dataset, const std::filesystem::path& config,
                       const std::filesystem::path& out, const std::optional<std::string>& sample_id) {
  const auto cfg = load_config(config);
  const Dataset data = load_any(dataset);
  std::ofstream o(out, std::ios::trunc);
  if (!o) throw ValidationError("cannot write " + out.string());
  o << "sample_id,dimension,birth,death,essential\n";
  for (std::size_t l : select_samples(data, sample_id)) {
    const auto diagram =
        rips_persistence(correlation_distance(data[l], data.sensor_names()), cfg.tda.max_dim, cfg.tda.max_filtration);
    for (const auto& p : diagram.sorted()) {
      o << data[l].sample_id << ',' << p.dimension << ',' << format_double(p.birth) << ','
        << format_double(p.death) << ',' << (p.essential ? 1 : 0) << '\n';
    }
  }
}

void cmd_dump_network(const std::filesystem::path& dataset, const std::filesystem::path& config,
                      const std::filesystem::path& out, const std::optional<std::string>& sample_id) {
  const auto cfg = load_config(config);
  const Dataset data = load_any(dataset);
  const auto& names = data.sensor_names();
  std::ofstream o(out, std::ios::trunc);
  if (!o) throw ValidationError("cannot write " + out.string());
  o << "sample_id,sensor_a,sensor_b,mi,weight\n";
  for (std::size_t l : select_samples(data, sample_id)) {
    const auto net = mi_network(data[l], cfg.network);
    for (Eigen::Index i = 0; i < net.nodes(); ++i)
      for (Eigen::Index j = i + 1; j < net.nodes(); ++j) {
        const double w = net.weights(i, j);
        if (w <= 0.0) continue;
        o << data[l].sample_id << ',' << names[static_cast<std::size_t>(i)] << ','
          << names[static_cast<std::size_t>(j)] << ',' << format_double(mi_from_weight(w)) << ','
          << format_double(w) << '\n';
      }
  }
}

}  // namespace ndk
