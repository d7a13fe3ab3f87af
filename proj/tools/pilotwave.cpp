#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pilotwave/cli/runner.hpp"

namespace cli = pilotwave::cli;

namespace {

int report(const std::exception& e) {
  const int code = cli::exit_code_for(e);
  std::cerr << "pilotwave: " << e.what() << '\n';
  return code;
}

int finish(const cli::RunOutcome& out) {
  for (const auto& d : out.degraded) std::cerr << "degraded: " << d << '\n';
  std::cout << "wrote " << out.files.size() << " file(s) and manifest.json to " << out.output_dir.string() << '\n';
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pilot-wave simulations with complex gauge couplings"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, preset;
  auto* run = app.add_subcommand("run", "Propagate a run spec and write its datasets");
  run->add_option("spec", spec_path, "Run spec (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir in the spec)");

  auto* validate = app.add_subcommand("validate", "Check a run spec without computing anything");
  validate->add_option("spec", spec_path, "Run spec (JSON)")->required();

  auto* figures = app.add_subcommand("figures", "Run a figure preset");
  figures->add_option("preset", preset, "Preset name")->required()->check(CLI::IsMember({"sinx"}));
  figures->add_option("--out", out_dir, "Output directory")->required();

  app.add_subcommand("version", "Print the library version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfig;
  }

  try {
    if (*run) {
      const auto spec = cli::load_run_spec(spec_path);
      std::optional<std::filesystem::path> dir;
      if (!out_dir.empty()) dir = out_dir;
      return finish(cli::run(spec, dir));
    }
    if (*validate) {
      const auto spec = cli::load_run_spec(spec_path);
      std::cout << cli::spec_to_json(spec).dump(2) << '\n';
      return cli::kExitOk;
    }
    if (*figures) return finish(cli::run(cli::sinx_preset_spec(out_dir), std::filesystem::path(out_dir)));
    std::cout << "pilotwave " << cli::kLibraryVersion << '\n';
    return cli::kExitOk;
  } catch (const std::exception& e) {
    return report(e);
  }
}
