#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mkdet/dataio.hpp"
#include "mkdet/error.hpp"
#include "mkdet/model_io.hpp"
#include "run_config.hpp"
#include "stages.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

int fail(int code, const char* kind, const std::string& message) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "mkdet: error: " << kind << ": " << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative-kernel sign detector: synth, train, cluster, detect, eval"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  bool show_config = false;
  app.set_version_flag("--version",
                       std::string("mkdet ") + kVersion + "\nmodel format: " + std::string(mkdet::kModelFormat) +
                           "\nfamily format: " + std::string(mkdet::kFamilyFormat) +
                           "\nmanifest format: " + std::string(mkdet::kManifestHeader.substr(1)));
  app.add_option("command", command, "synth | train | cluster | detect | eval | pipeline")
      ->check(CLI::IsMember({"synth", "train", "cluster", "detect", "eval", "pipeline"}));
  app.add_option("-c,--config", config_path, "key=value config file");
  app.add_option("-s,--set", overrides, "override, e.g. --set detect.stride=8")->take_all();
  app.add_flag("--print-config", show_config, "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(mkdet::cli::kExitConfig, "config", e.what());
  }

  try {
    const mkdet::cli::RunConfig cfg = mkdet::cli::load_run_config(config_path, overrides);
    if (show_config) {
      for (const auto& [k, v] : mkdet::cli::describe(cfg)) std::cout << k << '=' << v << '\n';
    }
    if (command.empty()) {
      if (show_config) return mkdet::cli::kExitOk;
      return fail(mkdet::cli::kExitConfig, "config", "no command given");
    }
    const int code = mkdet::cli::run_command(command, cfg, std::cout);
    if (code == mkdet::cli::kExitNotConverged) {
      return fail(code, "not-converged", "training stopped before the pool was free of false positives");
    }
    return code;
  } catch (const mkdet::ConfigError& e) {
    return fail(mkdet::cli::kExitConfig, "config", e.what());
  } catch (const mkdet::Error& e) {
    return fail(mkdet::cli::kExitData, "data", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(mkdet::cli::kExitData, "data", e.what());
  } catch (const std::exception& e) {
    return fail(mkdet::cli::kExitData, "internal", e.what());
  }
}
