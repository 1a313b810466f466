#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "fic/fic.hpp"

namespace {
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Focused model selection and frequentist model averaging for linear regression"};
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::int64_t reps = 0;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--data", data_path, "CSV data file (overrides config)");
  app.add_option("--seed", seed, "RNG seed (overrides config)");
  app.add_option("--reps", reps, "Monte Carlo draw / replicate count (overrides config)");
  app.add_option("--out", out_path, "report destination (overrides config; default stdout)");
  app.add_option("--threads", threads, "worker thread count (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    fic::RunConfig config = fic::parse_config(fic::load_config_document(config_path));
    if (app.count("--data")) config.data_path = data_path;
    if (app.count("--seed")) config.seed = seed;
    if (app.count("--reps")) {
      if (reps < 1) throw fic::validation_error("--reps must be >= 1");
      config.reps = reps;
    }
    if (app.count("--out")) config.out_path = out_path;
    if (app.count("--threads")) {
      if (threads < 1) throw fic::validation_error("--threads must be >= 1");
      config.threads = threads;
    }
    const fic::Report report = fic::run_command(config);
    report.write(config.out_path);
    return 0;
  } catch (const fic::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fic::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
