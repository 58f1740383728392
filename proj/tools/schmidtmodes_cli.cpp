// schmidtmodes: simulate, reconstruct and decompose SPDC spatial modes.
//
// Exit codes: 0 success, 2 configuration error, 3 data-contract error,
// 4 numerical-guard failure, 1 anything else.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "schmidtmodes/io/artifacts.hpp"
#include "schmidtmodes/io/pipeline.hpp"

namespace {

using schmidtmodes::io::CommandOptions;
using schmidtmodes::io::RunConfig;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kDataContract = 3, kNumericalGuard = 4 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  std::string oracle;
};

CommandOptions resolve(const Flags& flags) {
  RunConfig config = flags.config.empty() ? RunConfig{} : schmidtmodes::io::load_config(flags.config);
  if (flags.seed) config.seed = *flags.seed;
  // --out beats SCHMIDTMODES_OUT beats the config file.
  if (!flags.out.empty()) {
    config.output_dir = flags.out;
  } else if (const char* env = std::getenv("SCHMIDTMODES_OUT"); env && *env) {
    config.output_dir = env;
  }
  config.validate();
  const std::filesystem::path in = flags.in.empty() ? config.output_dir : std::filesystem::path(flags.in);
  CommandOptions options{config, config.output_dir, in, std::nullopt};
  if (!flags.oracle.empty()) options.oracle_dir = flags.oracle;
  return options;
}

void print_summary(const nlohmann::json& summary) { std::cout << summary.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schmidt-mode measurement pipeline for SPDC two-photon fields"};
  app.require_subcommand(1);

  Flags flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "JSON run configuration (defaults apply when omitted)");
    cmd->add_option("--seed", flags.seed, "Noise seed, overrides the config");
    cmd->add_option("--out", flags.out, "Output directory, overrides SCHMIDTMODES_OUT and the config");
  };

  auto* simulate = app.add_subcommand("simulate", "Write the phi = 0, pi/4 and beam-splitter-removed frames");
  add_common(simulate);

  auto* reconstruct = app.add_subcommand("reconstruct", "Recover W, I and mu per axis from recorded frames");
  add_common(reconstruct);
  reconstruct->add_option("--in", flags.in, "Directory holding the frames (default: output directory)");

  auto* schmidt = app.add_subcommand("schmidt", "Diagonalize reconstructed W into the Schmidt spectrum and modes");
  add_common(schmidt);
  schmidt->add_option("--in", flags.in, "Directory holding w_x/w_y (default: output directory)");
  schmidt->add_option("--oracle", flags.oracle, "Oracle directory for the fidelity table");

  auto* oracle = app.add_subcommand("oracle", "Direct SVD Schmidt decomposition of the model amplitude");
  add_common(oracle);

  auto* report = app.add_subcommand("report", "Run the whole chain and write report.json");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Bad flags are configuration errors too; --help exits cleanly.
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    const CommandOptions options = resolve(flags);
    if (simulate->parsed()) {
      schmidtmodes::io::cmd_simulate(options);
      std::cout << "frames written to " << options.out_dir.string() << "\n";
    } else if (reconstruct->parsed()) {
      schmidtmodes::io::cmd_reconstruct(options);
      std::cout << "reconstruction written to " << options.out_dir.string() << "\n";
    } else if (schmidt->parsed()) {
      print_summary(schmidtmodes::io::cmd_schmidt(options));
    } else if (oracle->parsed()) {
      print_summary(schmidtmodes::io::cmd_oracle(options));
    } else if (report->parsed()) {
      print_summary(schmidtmodes::io::cmd_report(options));
    }
    return kOk;
  } catch (const schmidtmodes::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const schmidtmodes::DataContractError& e) {
    std::cerr << "data contract error: " << e.what() << "\n";
    return kDataContract;
  } catch (const schmidtmodes::io::FormatError& e) {
    std::cerr << "data contract error: " << e.what() << "\n";
    return kDataContract;
  } catch (const schmidtmodes::NumericalGuardError& e) {
    std::cerr << "numerical guard: " << e.what() << "\n";
    return kNumericalGuard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
