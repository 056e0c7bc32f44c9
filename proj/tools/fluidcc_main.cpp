#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fluidcc/errors.hpp"
#include "fluidcc/runner.hpp"
#include "fluidcc/scenario.hpp"

namespace {

using namespace fluidcc::cli;

struct CommandArgs {
  std::string scenario;
  std::string out;
  std::string format;
};

void add_run_options(CLI::App* sub, CommandArgs& args) {
  sub->add_option("-s,--scenario", args.scenario, "Scenario YAML file")->required();
  sub->add_option("-o,--out", args.out, "Output directory (overrides $" + std::string(kOutputDirEnv) + " and the scenario)");
  sub->add_option("-f,--format", args.format, "Artifacts to write")->check(CLI::IsMember({"csv", "json", "both"}));
}

int execute(Command command, const CommandArgs& args) {
  const auto scenario = load_scenario(args.scenario);
  RunOptions options;
  options.out_dir = resolve_output_dir(args.out.empty() ? std::nullopt : std::optional(args.out), scenario);
  options.format = args.format.empty() ? scenario.output.format : parse_output_format(args.format);
  const auto summary = run(scenario, command, options);
  std::cout << summary.to_json().dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluid-model congestion control lab"};
  app.require_subcommand(1);

  CommandArgs args;
  std::optional<Command> command;
  const std::pair<const char*, Command> commands[] = {
      {"simulate", Command::simulate},
      {"allocate", Command::allocate},
      {"stability", Command::stability},
      {"sweep", Command::sweep},
  };
  const char* help[] = {
      "Integrate the model and write its trajectory",
      "Compute the fair allocation for the network",
      "Linearized verdict plus a confirming simulation",
      "Run the scenario's hopf-sweep or amplitude-vs-alpha experiment",
  };
  for (std::size_t i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    add_run_options(sub, args);
    sub->callback([&command, c = commands[i].second] { command = c; });
  }

  std::string canonical_path;
  bool canonical = false;
  auto* canon = app.add_subcommand("canonical", "Print the scenario in canonical form with its digest");
  canon->add_option("-s,--scenario", canonical_path, "Scenario YAML file")->required();
  canon->callback([&] { canonical = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (canonical) {
      const auto s = load_scenario(canonical_path);
      std::cout << "# digest: " << scenario_digest(s) << "\n" << emit_canonical(s);
      return kExitOk;
    }
    return execute(*command, args);
  } catch (const fluidcc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return kExitValidation;
  } catch (const fluidcc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
