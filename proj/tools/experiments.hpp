#pragma once

// The five CLI experiments. Each writes CSV data files plus summary.json into
// the output directory and returns the process exit code.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"

#include <stochspike/validation.hpp>

namespace stochspike::cli {

inline constexpr const char *version = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config_error = 2 };

inline std::string num(double v)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.12g", v);
	return buf;
}

class Csv {
public:
	Csv(const std::filesystem::path &path, const std::vector<std::string> &header) : out_(path)
	{
		if (!out_)
			throw std::runtime_error("cannot write " + path.string());
		row(header);
	}

	void row(const std::vector<std::string> &cells)
	{
		for (std::size_t k = 0; k < cells.size(); ++k)
			out_ << (k ? "," : "") << cells[k];
		out_ << '\n';
	}

private:
	std::ofstream out_;
};

class OutputDir {
public:
	explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

	std::filesystem::path file(const std::string &name)
	{
		files_.push_back(name);
		return dir_ / name;
	}

	void write_json(const std::string &name, const json &j)
	{
		std::ofstream out(file(name));
		out << j.dump(2) << '\n';
	}

	const std::vector<std::string> &files() const { return files_; }
	const std::filesystem::path &path() const { return dir_; }

private:
	std::filesystem::path dir_;
	std::vector<std::string> files_;
};

inline void write_manifest(OutputDir &out, const ExperimentConfig &cfg, double seconds, int exit_code)
{
	json files = json::array();
	for (const auto &f : out.files())
		files.push_back(json{{"name", f}, {"bytes", std::filesystem::file_size(out.path() / f)}});
	json m{{"command", cfg.experiment}, {"config_hash", config_hash(cfg)}, {"version", version},
	       {"seed", cfg.seed},          {"duration_s", seconds},          {"exit_code", exit_code},
	       {"files", files}};
	std::ofstream(out.path() / "manifest.json") << m.dump(2) << '\n';
}

inline RngStreamKey root_key(const ExperimentConfig &cfg, std::uint64_t stage)
{
	return {cfg.seed, stage, SourceTag::other, 0};
}

inline int cmd_transfer(const ExperimentConfig &cfg, OutputDir &out)
{
	if (!cfg.transfer)
		throw ConfigError("transfer section missing");
	const auto &s = *cfg.transfer;
	const auto grid = s.grid.values();
	Csv csv(out.file("transfer.csv"), {"regime", "i_o", "p_spike", "n_trials"});
	json regimes = json::array();
	for (std::size_t r = 0; r < s.regimes.size(); ++r) {
		const auto &reg = s.regimes[r];
		const auto curve = measure_transfer(cfg.neuron, reg.noise, grid, s.trials, cfg.rhythm.T_W, cfg.dt,
		                                    root_key(cfg, 0).with_tag(SourceTag::other).with_neuron(r));
		for (const auto &p : curve.points)
			csv.row({reg.name, num(p.i_o), num(p.p_spike), std::to_string(p.n_trials)});
		json jr{{"name", reg.name}, {"noise", detail::write_noise(reg.noise)}};
		try {
			const auto fit = fit_logistic(curve, cfg.neuron.resistance);
			jr["fit"] = json{{"midpoint", fit.midpoint}, {"temperature", fit.temperature}, {"residual", fit.residual}};
		} catch (const FitError &e) {
			jr["fit"] = json{{"error", e.what()}};
		}
		if (!reg.noise.silent()) {
			const auto est = temperature_analytic(cfg.neuron, reg.noise, s.gamma, cfg.rhythm.T_W);
			jr["analytic"] = json{{"temperature", est.t_analytic}, {"midpoint", est.midpoint}, {"slope", est.slope},
			                      {"t_mu", est.t_mu},              {"t_w_prime", est.t_w_prime}, {"gamma", est.gamma},
			                      {"mu", est.moments.mu},          {"sigma", est.moments.sigma}};
		}
		regimes.push_back(jr);
	}
	out.write_json("summary.json", json{{"experiment", "transfer"}, {"regimes", regimes}});
	return exit_ok;
}

inline int cmd_raster(const ExperimentConfig &cfg, OutputDir &out)
{
	if (!cfg.raster)
		throw ConfigError("raster section missing");
	const auto &s = *cfg.raster;
	std::size_t n = 0;
	std::vector<std::size_t> group_of;
	for (std::size_t g = 0; g < s.groups.size(); ++g)
		for (std::size_t k = 0; k < s.groups[g].count; ++k, ++n)
			group_of.push_back(g);
	WeightMatrix w(n);
	for (std::size_t j = 0; j < n; ++j)
		w.drive[j] = s.groups[group_of[j]].i_o;
	NoiseSchedule noise{s.noise, s.switch_time, s.after};
	NetworkOptions opt;
	opt.dt = cfg.dt;
	const auto run = run_network(w, cfg.rhythm, noise, cfg.neuron, s.cycles, root_key(cfg, 0), opt);

	{
		Csv csv(out.file("raster.csv"), {"cycle", "neuron", "time_ms"});
		for (const auto &r : run.raster)
			csv.row({std::to_string(r.cycle), std::to_string(r.neuron), num(r.time)});
	}
	std::vector<std::string> header{"cycle", "window_start_ms"};
	for (std::size_t g = 0; g < s.groups.size(); ++g)
		header.push_back("fraction_g" + std::to_string(g));
	Csv pop(out.file("population.csv"), header);
	std::vector<double> before(s.groups.size(), 0.0), after(s.groups.size(), 0.0);
	std::size_t n_before = 0, n_after = 0;
	for (const auto &c : run.cycles) {
		std::vector<std::size_t> active(s.groups.size(), 0);
		for (std::size_t j = 0; j < n; ++j)
			active[group_of[j]] += c.s[j];
		const double start = cfg.rhythm.window_start(c.k);
		const bool post = s.switch_time && start >= *s.switch_time;
		(post ? n_after : n_before) += 1;
		std::vector<std::string> row{std::to_string(c.k), num(start)};
		for (std::size_t g = 0; g < s.groups.size(); ++g) {
			const double f = s.groups[g].count ? static_cast<double>(active[g]) / static_cast<double>(s.groups[g].count) : 0.0;
			(post ? after : before)[g] += f;
			row.push_back(num(f));
		}
		pop.row(row);
	}
	json groups = json::array();
	for (std::size_t g = 0; g < s.groups.size(); ++g) {
		json jg{{"count", s.groups[g].count}, {"i_o", s.groups[g].i_o}};
		jg["mean_fraction_before_switch"] = n_before ? json(before[g] / static_cast<double>(n_before)) : json(nullptr);
		jg["mean_fraction_after_switch"] = n_after ? json(after[g] / static_cast<double>(n_after)) : json(nullptr);
		groups.push_back(jg);
	}
	out.write_json("summary.json", json{{"experiment", "raster"},
	                                    {"neurons", n},
	                                    {"cycles", s.cycles},
	                                    {"spikes", run.raster.size()},
	                                    {"groups", groups}});
	return exit_ok;
}

inline int cmd_xor(const ExperimentConfig &cfg, OutputDir &out)
{
	if (!cfg.xor_net)
		throw ConfigError("xor section missing");
	const auto &s = *cfg.xor_net;
	const NoiseSchedule noise = NoiseSchedule::constant(s.noise);
	Csv table(out.file("truth_table.csv"), {"in0", "in1", "expected", "p_out", "success_rate", "trials"});
	Csv traces(out.file("traces.csv"), {"in0", "in1", "cycle", "neuron", "time_ms", "u", "current"});
	Csv raster(out.file("raster.csv"), {"in0", "in1", "cycle", "neuron", "time_ms"});
	json pairs = json::array();
	bool all_correct = true;
	std::size_t pair = 0;
	for (int a = 0; a < 2; ++a)
		for (int b = 0; b < 2; ++b, ++pair) {
			std::size_t ones = 0;
			for (std::size_t t = 0; t < s.trials; ++t) {
				const bool rec = t == 0;
				const auto res = run_xor(a, b, s.weights, noise, cfg.neuron, cfg.rhythm,
				                         root_key(cfg, 0).with_neuron(pair).with_trial(t), rec, cfg.dt);
				ones += res.out;
				if (rec) {
					for (const auto &tr : res.run.traces)
						for (const auto &p : tr.points)
							traces.row({std::to_string(a), std::to_string(b), std::to_string(tr.cycle),
							            std::to_string(tr.neuron), num(p.t), num(p.u), num(tr.current)});
					for (const auto &r : res.run.raster)
						raster.row({std::to_string(a), std::to_string(b), std::to_string(r.cycle), std::to_string(r.neuron),
						            num(r.time)});
				}
			}
			const bool expected = xor_expected(a, b);
			const double p_out = static_cast<double>(ones) / static_cast<double>(s.trials);
			const double success = expected ? p_out : 1.0 - p_out;
			all_correct = all_correct && success == 1.0;
			table.row({std::to_string(a), std::to_string(b), std::to_string(expected), num(p_out), num(success),
			           std::to_string(s.trials)});
			pairs.push_back(json{{"in0", a}, {"in1", b}, {"expected", expected}, {"p_out", p_out}, {"success_rate", success}});
		}
	out.write_json("summary.json", json{{"experiment", "xor"}, {"trials", s.trials}, {"all_correct", all_correct}, {"pairs", pairs}});
	return exit_ok;
}

struct BoltzmannSetup {
	PatternSet patterns;
	FieldModel model;
	double t_boltzmann = 0.0;
	LogisticFit mapping;
	WeightMatrix weights;
};

inline BoltzmannSetup prepare_boltzmann(const ExperimentConfig &cfg)
{
	const auto &s = *cfg.boltzmann;
	BoltzmannSetup b;
	b.patterns = generate_stable_patterns(s.n, s.patterns, s.sparsity, s.min_overlap, root_key(cfg, 1), s.a, s.beta);
	b.model = make_field_model(b.patterns, s.a, s.beta);
	CalibrationOptions cal;
	cal.target_dwell = s.target_dwell;
	cal.runs = s.calibration_runs;
	cal.cycles = s.calibration_cycles;
	b.t_boltzmann = calibrate_temperature(b.model, b.patterns, root_key(cfg, 2), cal);
	const auto curve = measure_transfer(cfg.neuron, s.mapping_noise, s.mapping_grid.values(), s.mapping_trials,
	                                    cfg.rhythm.T_W, cfg.dt, root_key(cfg, 3));
	try {
		b.mapping = fit_logistic(curve, cfg.neuron.resistance);
	} catch (const FitError &e) {
		throw ConfigError(std::string("boltzmann.mapping_grid: ") + e.what());
	}
	b.weights = spiking_weights(b.model, b.t_boltzmann, b.mapping.midpoint, b.mapping.temperature);
	return b;
}

inline int cmd_boltzmann(const ExperimentConfig &cfg, OutputDir &out)
{
	if (!cfg.boltzmann)
		throw ConfigError("boltzmann section missing");
	const auto &s = *cfg.boltzmann;
	const auto b = prepare_boltzmann(cfg);
	HoppingOptions hop{s.dwell_level, s.transition_threshold, s.hold};
	const auto run = run_boltzmann(b.weights, b.patterns, NoiseSchedule::constant(s.noise), cfg.rhythm, cfg.neuron,
	                               s.cycles, root_key(cfg, 4), s.start_pattern, hop, s.raster, cfg.dt);
	const std::size_t S = b.patterns.size();
	{
		std::vector<std::string> header{"neuron"};
		for (std::size_t q = 0; q < S; ++q)
			header.push_back("V" + std::to_string(q + 1));
		Csv csv(out.file("patterns.csv"), header);
		for (std::size_t i = 0; i < b.patterns.n; ++i) {
			std::vector<std::string> row{std::to_string(i)};
			for (const auto &v : b.patterns.patterns)
				row.push_back(std::to_string(v[i]));
			csv.row(row);
		}
	}
	{
		std::vector<std::string> header{"k"};
		for (std::size_t q = 0; q < S; ++q)
			header.push_back("m" + std::to_string(q + 1));
		header.insert(header.end(), {"argmax", "is_transition"});
		Csv csv(out.file("correlation.csv"), header);
		for (const auto &r : run.trace) {
			std::vector<std::string> row{std::to_string(r.k)};
			for (double m : r.m)
				row.push_back(num(m));
			row.push_back(std::to_string(r.argmax + 1));
			row.push_back(r.is_transition ? "1" : "0");
			csv.row(row);
		}
	}
	{
		Csv csv(out.file("transitions.csv"), {"cycle", "from", "to", "correlation"});
		for (const auto &t : run.transitions)
			csv.row({std::to_string(t.cycle), std::to_string(t.from + 1), std::to_string(t.to + 1), num(t.correlation)});
	}
	if (s.raster) {
		Csv csv(out.file("raster.csv"), {"cycle", "neuron", "time_ms"});
		for (const auto &r : run.raster)
			csv.row({std::to_string(r.cycle), std::to_string(r.neuron), num(r.time)});
	}
	json overlaps = json::array();
	for (const auto &a : b.patterns.patterns) {
		json row = json::array();
		for (const auto &c : b.patterns.patterns)
			row.push_back(shared_ones(a, c));
		overlaps.push_back(row);
	}
	out.write_json("summary.json",
	               json{{"experiment", "boltzmann"},
	                    {"patterns", {{"n", b.patterns.n}, {"ones", b.patterns.ones}, {"shared_ones", overlaps}}},
	                    {"field_model", {{"a", b.model.a}, {"beta", b.model.beta}, {"c", b.model.c}, {"margin", b.model.margin}}},
	                    {"boltzmann_temperature", b.t_boltzmann},
	                    {"mapping",
	                     {{"midpoint", b.mapping.midpoint},
	                      {"temperature", b.mapping.temperature},
	                      {"gain", b.mapping.temperature / b.t_boltzmann}}},
	                    {"cycles", s.cycles},
	                    {"dwell_fraction", run.dwell},
	                    {"transitions", run.transitions.size()}});
	return exit_ok;
}

inline int cmd_validate(const ExperimentConfig &cfg, OutputDir &out)
{
	if (!cfg.validate)
		throw ConfigError("validate section missing");
	const auto &s = *cfg.validate;
	// Fail early on a window shorter than the transient exclusion.
	effective_window(cfg.neuron, s.gamma, cfg.rhythm.T_W);

	Csv report(out.file("report.csv"), {"check", "measured", "limit", "pass"});
	json checks = json::array();
	bool all = true;
	auto record = [&](const std::string &name, double measured, double limit, bool pass) {
		all = all && pass;
		report.row({name, num(measured), num(limit), pass ? "1" : "0"});
		checks.push_back(json{{"check", name}, {"measured", measured}, {"limit", limit}, {"pass", pass}});
	};

	if (s.networks > 0) {
		const auto eq = clocked_equivalence(s.networks, s.max_n, s.cycles, root_key(cfg, 0), cfg.neuron, cfg.rhythm, cfg.dt);
		record("clocked_equivalence_matches", static_cast<double>(eq.matches), static_cast<double>(eq.total),
		       eq.matches == eq.total);
	}
	for (std::size_t r = 0; r < s.regimes.size(); ++r) {
		const auto &reg = s.regimes[r];
		const auto tc = compare_temperature(cfg.neuron, reg.noise, s.grid.values(), s.trials, s.gamma, cfg.rhythm.T_W,
		                                    cfg.dt, root_key(cfg, 1).with_neuron(r));
		report.row({"t_fitted_" + reg.name, num(tc.fit.temperature), "", ""});
		report.row({"t_analytic_" + reg.name, num(tc.analytic.t_analytic), "", ""});
		record("temperature_rel_diff_" + reg.name, tc.rel_diff, s.max_temperature_rel, tc.rel_diff <= s.max_temperature_rel);
	}
	if (!s.regimes.empty() && !s.mfpt_targets.empty()) {
		const auto &reg = s.regimes[s.regimes.size() / 2];
		const auto mf = compare_mfpt(cfg.neuron, reg.noise, s.mfpt_targets, s.mfpt_paths, s.mfpt_dt, s.gamma,
		                             cfg.rhythm.T_W, root_key(cfg, 2));
		for (const auto &c : mf)
			record("mfpt_rel_error_p" + num(c.target_p), c.rel_error, s.max_mfpt_rel,
			       c.rel_error <= s.max_mfpt_rel && c.censored == 0);
	}
	out.write_json("summary.json", json{{"experiment", "validate"}, {"all_pass", all}, {"checks", checks}});
	return all ? exit_ok : exit_check_failed;
}

inline int run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &dir)
{
	const auto t0 = std::chrono::steady_clock::now();
	OutputDir out(dir);
	int code = exit_ok;
	if (cfg.experiment == "transfer")
		code = cmd_transfer(cfg, out);
	else if (cfg.experiment == "raster")
		code = cmd_raster(cfg, out);
	else if (cfg.experiment == "xor")
		code = cmd_xor(cfg, out);
	else if (cfg.experiment == "boltzmann")
		code = cmd_boltzmann(cfg, out);
	else if (cfg.experiment == "validate")
		code = cmd_validate(cfg, out);
	else
		throw ConfigError("unknown experiment '" + cfg.experiment + "'");
	const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	write_manifest(out, cfg, secs, code);
	return code;
}

// --trials overrides every trial count of the selected experiment.
inline void apply_trials(ExperimentConfig &cfg, std::size_t trials)
{
	if (trials == 0)
		throw ConfigError("--trials must be >= 1");
	if (cfg.transfer)
		cfg.transfer->trials = trials;
	if (cfg.xor_net)
		cfg.xor_net->trials = trials;
	if (cfg.boltzmann)
		cfg.boltzmann->mapping_trials = trials;
	if (cfg.validate)
		cfg.validate->trials = trials;
}

} // namespace stochspike::cli
