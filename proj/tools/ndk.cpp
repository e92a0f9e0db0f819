// Command-line front end for the feature extraction and decoding pipeline.

#include "ndk/error.hpp"
#include "ndk/log.hpp"
#include "ndk/parallel.hpp"
#include "ndk/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Feature extraction and elastic-net decoding of multichannel recordings"};
  app.require_subcommand(1);
  std::size_t workers = ndk::default_workers();
  app.add_option("-j,--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  ndk::SynthOptions synth;
  std::string synth_out, synth_format = "binary";
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic benchmark dataset");
  c_synth->add_option("out", synth_out, "Output file (binary) or directory (csv)")->required();
  c_synth->add_option("--sensors", synth.sensors);
  c_synth->add_option("--timepoints", synth.timepoints);
  c_synth->add_option("--samples", synth.samples);
  c_synth->add_option("--classes", synth.classes);
  c_synth->add_option("--second-domain", synth.second_domain, "Trailing samples tagged domain 2");
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--format", synth_format)->check(CLI::IsMember({"binary", "csv"}));

  std::string dataset, config, out, features, basis_in, model, predictions, manifest, sample;
  auto* c_extract = app.add_subcommand("extract", "Compute the configured feature families");
  c_extract->add_option("dataset", dataset)->required();
  c_extract->add_option("config", config)->required();
  c_extract->add_option("out", out, "Feature CSV")->required();
  c_extract->add_option("--basis-in", basis_in, "Reuse a saved FPCA basis");

  auto* c_cv = app.add_subcommand("cv", "Nested cross-validation over the alpha grid");
  c_cv->add_option("features", features)->required();
  c_cv->add_option("config", config)->required();
  c_cv->add_option("out_dir", out)->required();

  double alpha = 1.0, lambda = 0.0;
  int path_length = 50;
  auto* c_train = app.add_subcommand("train", "Fit the classifier on all labelled rows");
  c_train->add_option("features", features)->required();
  c_train->add_option("model", model, "Model output")->required();
  auto* o_manifest = c_train->add_option("--cv", manifest, "Take alpha and lambda from a cv manifest");
  auto* o_alpha = c_train->add_option("--alpha", alpha)->excludes(o_manifest);
  auto* o_lambda = c_train->add_option("--lambda", lambda)->excludes(o_manifest);
  c_train->add_option("--path-length", path_length)->excludes(o_manifest);

  auto* c_predict = app.add_subcommand("predict", "Class predictions and probabilities");
  c_predict->add_option("model", model)->required();
  c_predict->add_option("features", features)->required();
  c_predict->add_option("out", out)->required();

  auto* c_evaluate = app.add_subcommand("evaluate", "Accuracy and confusion matrix");
  c_evaluate->add_option("predictions", predictions)->required();
  c_evaluate->add_option("labels", features, "Feature CSV holding the true labels")->required();
  c_evaluate->add_option("out", out)->required();

  auto* c_diagrams = app.add_subcommand("dump-diagrams", "Persistence diagrams as CSV");
  c_diagrams->add_option("dataset", dataset)->required();
  c_diagrams->add_option("config", config)->required();
  c_diagrams->add_option("out", out)->required();
  c_diagrams->add_option("--sample", sample);

  auto* c_network = app.add_subcommand("dump-network", "Thresholded network edges as CSV");
  c_network->add_option("dataset", dataset)->required();
  c_network->add_option("config", config)->required();
  c_network->add_option("out", out)->required();
  c_network->add_option("--sample", sample);

  CLI11_PARSE(app, argc, argv);

  auto optional_sample = [&]() -> std::optional<std::string> {
    if (sample.empty()) return std::nullopt;
    return sample;
  };

  try {
    if (c_synth->parsed()) {
      synth.format = synth_format == "csv" ? ndk::DatasetFormat::CsvDir : ndk::DatasetFormat::PackedBinary;
      ndk::cmd_synth(synth, synth_out);
    } else if (c_extract->parsed()) {
      std::optional<std::filesystem::path> basis;
      if (!basis_in.empty()) basis = basis_in;
      const auto fm = ndk::cmd_extract(dataset, config, out, basis, workers);
      std::cout << fm.rows() << " samples, " << fm.cols() << " features\n";
    } else if (c_cv->parsed()) {
      const auto result = ndk::cmd_cv(features, config, out, workers);
      std::cout << "best alpha " << ndk::format_double(result.best_alpha) << ", lambda "
                << ndk::format_double(result.best_lambda) << '\n';
    } else if (c_train->parsed()) {
      ndk::TrainChoice choice;
      if (!manifest.empty()) {
        choice = ndk::read_cv_choice(manifest);
      } else {
        if (o_alpha->count() == 0 || o_lambda->count() == 0) {
          throw ndk::ValidationError("train needs --cv or both --alpha and --lambda");
        }
        choice = {alpha, lambda, path_length};
      }
      ndk::cmd_train(features, choice, model);
    } else if (c_predict->parsed()) {
      ndk::cmd_predict(model, features, out);
    } else if (c_evaluate->parsed()) {
      const auto e = ndk::cmd_evaluate(predictions, features, out);
      std::cout << "accuracy " << ndk::format_double(e.accuracy) << '\n';
    } else if (c_diagrams->parsed()) {
      ndk::cmd_dump_diagrams(dataset, config, out, optional_sample());
    } else if (c_network->parsed()) {
      ndk::cmd_dump_network(dataset, config, out, optional_sample());
    }
  } catch (const ndk::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ndk::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
