// stochspike: command-line front end for the clocked spiking-network
// experiments.
//
//   stochspike transfer|raster|xor|boltzmann|validate --config <path> --out <dir> [--seed N] [--trials N]
//
// Exit codes: 0 success, 1 validation check failed, 2 configuration error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "experiments.hpp"

int main(int argc, char **argv)
{
	using namespace stochspike::cli;

	CLI::App app{"Clocked stochastic spiking-network experiments"};
	app.set_version_flag("--version", std::string(version));
	app.require_subcommand(1);

	std::string config_path;
	std::string out_dir;
	std::optional<std::uint64_t> seed;
	std::optional<std::size_t> trials;
	for (const char *name : {"transfer", "raster", "xor", "boltzmann", "validate"}) {
		auto *sub = app.add_subcommand(name);
		sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
		sub->add_option("--out", out_dir, "output directory")->required();
		sub->add_option("--seed", seed, "override the configured seed");
		sub->add_option("--trials", trials, "override trial counts");
	}

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? exit_ok : exit_config_error;
	}

	const std::string command = app.get_subcommands().front()->get_name();
	try {
		auto cfg = load_config(config_path);
		if (cfg.experiment.empty())
			cfg.experiment = command;
		if (cfg.experiment != command)
			throw stochspike::ConfigError("config is for '" + cfg.experiment + "', not '" + command + "'");
		if (seed)
			cfg.seed = *seed;
		if (trials)
			apply_trials(cfg, *trials);
		const int code = run_experiment(cfg, out_dir);
		if (code == exit_check_failed)
			std::cerr << command << ": one or more checks failed (see " << out_dir << "/report.csv)\n";
		return code;
	} catch (const stochspike::ConfigError &e) {
		std::cerr << command << ": configuration error: " << e.what() << '\n';
		return exit_config_error;
	} catch (const std::invalid_argument &e) {
		std::cerr << command << ": configuration error: " << e.what() << '\n';
		return exit_config_error;
	} catch (const std::exception &e) {
		std::cerr << command << ": error: " << e.what() << '\n';
		return exit_check_failed;
	}
}
