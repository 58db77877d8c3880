#pragma once

// Experiment configuration: JSON documents with one section per experiment.
// Unknown keys are rejected; missing keys take the documented defaults.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include <stochspike/boltzmann.hpp>
#include <stochspike/thermometry.hpp>
#include <stochspike/validation.hpp>
#include <stochspike/xor.hpp>

namespace stochspike::cli {

using json = nlohmann::ordered_json;

struct GridSpec {
	double start = 0.6;
	double stop = 2.0;
	double step = 0.01;

	std::vector<double> values() const { return linear_grid(start, stop, step); }
	friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

struct Regime {
	std::string name;
	NoiseConfig noise;
	friend bool operator==(const Regime &, const Regime &) = default;
};

struct TransferSection {
	GridSpec grid;
	std::size_t trials = 2000;
	double gamma = 3.0;
	std::vector<Regime> regimes;
	friend bool operator==(const TransferSection &, const TransferSection &) = default;
};

struct PopulationGroup {
	std::size_t count = 0;
	double i_o = 0.0;
	friend bool operator==(const PopulationGroup &, const PopulationGroup &) = default;
};

struct RasterSection {
	std::vector<PopulationGroup> groups;
	std::size_t cycles = 17;
	NoiseConfig noise;
	std::optional<double> switch_time;
	NoiseConfig after;
	friend bool operator==(const RasterSection &, const RasterSection &) = default;
};

struct XorSection {
	XorWeights weights;
	std::size_t trials = 1;
	NoiseConfig noise;
	friend bool operator==(const XorSection &a, const XorSection &b)
	{
		return a.weights.and_in == b.weights.and_in && a.weights.or_in == b.weights.or_in &&
		       a.weights.excite == b.weights.excite && a.weights.inhibit == b.weights.inhibit &&
		       a.weights.hold == b.weights.hold && a.trials == b.trials && a.noise == b.noise;
	}
};

struct BoltzmannSection {
	std::size_t n = 128;
	std::size_t patterns = 4;
	double sparsity = 0.75;
	double min_overlap = 0.30;
	std::size_t cycles = 2000;
	std::optional<std::size_t> start_pattern = 0;
	double a = 0.35;
	double beta = 1.0;
	double dwell_level = 0.8;
	double transition_threshold = 0.6;
	std::size_t hold = 2;
	double target_dwell = 0.7;
	std::size_t calibration_runs = 6;
	std::size_t calibration_cycles = 500;
	NoiseConfig noise;           // regime the network runs in
	NoiseConfig mapping_noise;   // regime whose transfer curve sets x_mid and T_fit
	GridSpec mapping_grid{0.0, 1.6, 0.02};
	std::size_t mapping_trials = 2000;
	bool raster = true;
	friend bool operator==(const BoltzmannSection &, const BoltzmannSection &) = default;
};

struct ValidateSection {
	std::size_t networks = 100;
	std::size_t max_n = 8;
	std::size_t cycles = 5;
	double gamma = 3.0;
	std::vector<Regime> regimes;
	GridSpec grid{0.0, 1.6, 0.02};
	std::size_t trials = 2000;
	double max_temperature_rel = 0.35;
	std::vector<double> mfpt_targets{0.05, 0.25, 0.5, 0.75, 0.95};
	std::size_t mfpt_paths = 10000;
	double mfpt_dt = 0.01;
	double max_mfpt_rel = 0.10;
	friend bool operator==(const ValidateSection &, const ValidateSection &) = default;
};

struct ExperimentConfig {
	std::string experiment;
	std::uint64_t seed = 1;
	double dt = 0.01;
	NeuronParams neuron;
	RhythmConfig rhythm;
	std::optional<TransferSection> transfer;
	std::optional<RasterSection> raster;
	std::optional<XorSection> xor_net;
	std::optional<BoltzmannSection> boltzmann;
	std::optional<ValidateSection> validate;
};

namespace detail {

inline void only_keys(const json &j, const std::set<std::string> &allowed, const std::string &where)
{
	if (!j.is_object())
		throw ConfigError(where + ": expected an object");
	for (const auto &[k, v] : j.items())
		if (!allowed.count(k))
			throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
T get(const json &j, const char *key, T fallback, const std::string &where)
{
	if (!j.contains(key))
		return fallback;
	try {
		return j.at(key).get<T>();
	} catch (const json::exception &e) {
		throw ConfigError(where + "." + key + ": " + e.what());
	}
}

inline NoiseConfig read_noise(const json &j, const std::string &where)
{
	only_keys(j, {"lambda_e", "lambda_i", "w_e", "w_i"}, where);
	NoiseConfig n;
	n.lambda_e = get(j, "lambda_e", n.lambda_e, where);
	n.lambda_i = get(j, "lambda_i", n.lambda_i, where);
	n.w_e = get(j, "w_e", n.w_e, where);
	n.w_i = get(j, "w_i", n.w_i, where);
	try {
		n.validate();
	} catch (const std::invalid_argument &e) {
		throw ConfigError(where + ": " + e.what());
	}
	return n;
}

inline json write_noise(const NoiseConfig &n)
{
	return json{{"lambda_e", n.lambda_e}, {"lambda_i", n.lambda_i}, {"w_e", n.w_e}, {"w_i", n.w_i}};
}

inline GridSpec read_grid(const json &j, GridSpec g, const std::string &where)
{
	only_keys(j, {"start", "stop", "step"}, where);
	g.start = get(j, "start", g.start, where);
	g.stop = get(j, "stop", g.stop, where);
	g.step = get(j, "step", g.step, where);
	if (!(g.step > 0.0) || !(g.stop >= g.start))
		throw ConfigError(where + ": need step > 0 and stop >= start");
	return g;
}

inline json write_grid(const GridSpec &g) { return json{{"start", g.start}, {"stop", g.stop}, {"step", g.step}}; }

inline std::vector<Regime> read_regimes(const json &j, const std::string &where)
{
	if (!j.is_array())
		throw ConfigError(where + ": expected an array");
	std::vector<Regime> out;
	for (std::size_t k = 0; k < j.size(); ++k) {
		const auto w = where + "[" + std::to_string(k) + "]";
		only_keys(j[k], {"name", "noise"}, w);
		Regime r;
		r.name = get<std::string>(j[k], "name", "regime" + std::to_string(k), w);
		r.noise = read_noise(j[k].value("noise", json::object()), w + ".noise");
		out.push_back(r);
	}
	return out;
}

inline json write_regimes(const std::vector<Regime> &rs)
{
	json a = json::array();
	for (const auto &r : rs)
		a.push_back(json{{"name", r.name}, {"noise", write_noise(r.noise)}});
	return a;
}

inline void positive(std::size_t v, const std::string &what)
{
	if (v == 0)
		throw ConfigError(what + " must be >= 1");
}

} // namespace detail

inline ExperimentConfig parse_config(const json &j)
{
	using namespace detail;
	only_keys(j, {"experiment", "seed", "dt", "neuron", "rhythm", "transfer", "raster", "xor", "boltzmann", "validate"},
	          "config");
	ExperimentConfig c;
	c.experiment = get<std::string>(j, "experiment", "", "config");
	c.seed = get<std::uint64_t>(j, "seed", c.seed, "config");
	c.dt = get(j, "dt", c.dt, "config");
	if (!(c.dt > 0.0))
		throw ConfigError("config.dt must be positive");

	const auto jn = j.value("neuron", json::object());
	only_keys(jn, {"tau_m", "u_rest", "u_thresh", "resistance", "tau_alpha", "delta_alpha"}, "neuron");
	c.neuron.tau_m = get(jn, "tau_m", c.neuron.tau_m, "neuron");
	c.neuron.u_rest = get(jn, "u_rest", c.neuron.u_rest, "neuron");
	c.neuron.u_thresh = get(jn, "u_thresh", c.neuron.u_thresh, "neuron");
	c.neuron.resistance = get(jn, "resistance", c.neuron.resistance, "neuron");
	c.neuron.tau_alpha = get(jn, "tau_alpha", c.neuron.tau_alpha, "neuron");
	c.neuron.delta_alpha = get(jn, "delta_alpha", c.neuron.delta_alpha, "neuron");
	try {
		c.neuron.validate();
	} catch (const std::invalid_argument &e) {
		throw ConfigError(e.what());
	}

	const auto jr = j.value("rhythm", json::object());
	only_keys(jr, {"T_W"}, "rhythm");
	c.rhythm.T_W = get(jr, "T_W", c.rhythm.T_W, "rhythm");
	try {
		window_steps(c.rhythm.T_W, c.dt);
	} catch (const std::invalid_argument &e) {
		throw ConfigError(e.what());
	}

	if (j.contains("transfer")) {
		const auto &t = j["transfer"];
		only_keys(t, {"grid", "trials", "gamma", "regimes"}, "transfer");
		TransferSection s;
		if (t.contains("grid"))
			s.grid = read_grid(t["grid"], s.grid, "transfer.grid");
		s.trials = get(t, "trials", s.trials, "transfer");
		s.gamma = get(t, "gamma", s.gamma, "transfer");
		if (!t.contains("regimes"))
			throw ConfigError("transfer.regimes is required");
		s.regimes = read_regimes(t["regimes"], "transfer.regimes");
		positive(s.trials, "transfer.trials");
		c.transfer = s;
	}
	if (j.contains("raster")) {
		const auto &r = j["raster"];
		only_keys(r, {"groups", "cycles", "noise", "switch_time", "after"}, "raster");
		RasterSection s;
		if (r.contains("groups")) {
			if (!r["groups"].is_array())
				throw ConfigError("raster.groups: expected an array");
			for (std::size_t k = 0; k < r["groups"].size(); ++k) {
				const auto w = "raster.groups[" + std::to_string(k) + "]";
				only_keys(r["groups"][k], {"count", "i_o"}, w);
				s.groups.push_back({get<std::size_t>(r["groups"][k], "count", 0, w), get(r["groups"][k], "i_o", 0.0, w)});
			}
		}
		s.cycles = get(r, "cycles", s.cycles, "raster");
		positive(s.cycles, "raster.cycles");
		s.noise = read_noise(r.value("noise", json::object()), "raster.noise");
		if (r.contains("switch_time") && !r["switch_time"].is_null())
			s.switch_time = get(r, "switch_time", 0.0, "raster");
		s.after = r.contains("after") ? read_noise(r["after"], "raster.after") : s.noise;
		c.raster = s;
	}
	if (j.contains("xor")) {
		const auto &x = j["xor"];
		only_keys(x, {"weights", "trials", "noise"}, "xor");
		if (!x.contains("weights"))
			throw ConfigError("xor.weights is required");
		XorSection s;
		const auto &w = x["weights"];
		only_keys(w, {"and_in", "or_in", "excite", "inhibit", "hold"}, "xor.weights");
		for (const char *key : {"and_in", "or_in", "excite", "inhibit"})
			if (!w.contains(key))
				throw ConfigError(std::string("xor.weights.") + key + " is required");
		s.weights.and_in = get(w, "and_in", 0.0, "xor.weights");
		s.weights.or_in = get(w, "or_in", 0.0, "xor.weights");
		s.weights.excite = get(w, "excite", 0.0, "xor.weights");
		s.weights.inhibit = get(w, "inhibit", 0.0, "xor.weights");
		s.weights.hold = get(w, "hold", s.weights.hold, "xor.weights");
		if (!(s.weights.hold > 0.0))
			throw ConfigError("xor.weights.hold must be positive");
		s.trials = get(x, "trials", s.trials, "xor");
		positive(s.trials, "xor.trials");
		s.noise = read_noise(x.value("noise", json::object()), "xor.noise");
		c.xor_net = s;
	}
	if (j.contains("boltzmann")) {
		const auto &b = j["boltzmann"];
		only_keys(b, {"n", "patterns", "sparsity", "min_overlap", "cycles", "start_pattern", "a", "beta", "dwell_level",
		              "transition_threshold", "hold", "target_dwell", "calibration_runs", "calibration_cycles", "noise",
		              "mapping_noise", "mapping_grid", "mapping_trials", "raster"},
		          "boltzmann");
		BoltzmannSection s;
		s.n = get(b, "n", s.n, "boltzmann");
		s.patterns = get(b, "patterns", s.patterns, "boltzmann");
		s.sparsity = get(b, "sparsity", s.sparsity, "boltzmann");
		s.min_overlap = get(b, "min_overlap", s.min_overlap, "boltzmann");
		s.cycles = get(b, "cycles", s.cycles, "boltzmann");
		if (b.contains("start_pattern"))
			s.start_pattern = b["start_pattern"].is_null() ? std::nullopt
			                                                : std::optional(get<std::size_t>(b, "start_pattern", 0, "boltzmann"));
		s.a = get(b, "a", s.a, "boltzmann");
		s.beta = get(b, "beta", s.beta, "boltzmann");
		s.dwell_level = get(b, "dwell_level", s.dwell_level, "boltzmann");
		s.transition_threshold = get(b, "transition_threshold", s.transition_threshold, "boltzmann");
		s.hold = get(b, "hold", s.hold, "boltzmann");
		s.target_dwell = get(b, "target_dwell", s.target_dwell, "boltzmann");
		s.calibration_runs = get(b, "calibration_runs", s.calibration_runs, "boltzmann");
		s.calibration_cycles = get(b, "calibration_cycles", s.calibration_cycles, "boltzmann");
		s.noise = read_noise(b.value("noise", json::object()), "boltzmann.noise");
		if (!b.contains("mapping_noise"))
			throw ConfigError("boltzmann.mapping_noise is required");
		s.mapping_noise = read_noise(b["mapping_noise"], "boltzmann.mapping_noise");
		if (s.mapping_noise.silent())
			throw ConfigError("boltzmann.mapping_noise must be a noisy regime");
		if (b.contains("mapping_grid"))
			s.mapping_grid = read_grid(b["mapping_grid"], s.mapping_grid, "boltzmann.mapping_grid");
		s.mapping_trials = get(b, "mapping_trials", s.mapping_trials, "boltzmann");
		s.raster = get(b, "raster", s.raster, "boltzmann");
		positive(s.n, "boltzmann.n");
		positive(s.patterns, "boltzmann.patterns");
		positive(s.cycles, "boltzmann.cycles");
		positive(s.hold, "boltzmann.hold");
		positive(s.calibration_runs, "boltzmann.calibration_runs");
		positive(s.calibration_cycles, "boltzmann.calibration_cycles");
		positive(s.mapping_trials, "boltzmann.mapping_trials");
		if (s.start_pattern && *s.start_pattern >= s.patterns)
			throw ConfigError("boltzmann.start_pattern out of range");
		if (!(s.target_dwell > 0.0 && s.target_dwell < 1.0))
			throw ConfigError("boltzmann.target_dwell must lie in (0, 1)");
		c.boltzmann = s;
	}
	if (j.contains("validate")) {
		const auto &v = j["validate"];
		only_keys(v, {"networks", "max_n", "cycles", "gamma", "regimes", "grid", "trials", "max_temperature_rel",
		              "mfpt_targets", "mfpt_paths", "mfpt_dt", "max_mfpt_rel"},
		          "validate");
		ValidateSection s;
		s.networks = get(v, "networks", s.networks, "validate");
		s.max_n = get(v, "max_n", s.max_n, "validate");
		s.cycles = get(v, "cycles", s.cycles, "validate");
		s.gamma = get(v, "gamma", s.gamma, "validate");
		if (v.contains("regimes"))
			s.regimes = read_regimes(v["regimes"], "validate.regimes");
		if (v.contains("grid"))
			s.grid = read_grid(v["grid"], s.grid, "validate.grid");
		s.trials = get(v, "trials", s.trials, "validate");
		s.max_temperature_rel = get(v, "max_temperature_rel", s.max_temperature_rel, "validate");
		s.mfpt_targets = get(v, "mfpt_targets", s.mfpt_targets, "validate");
		s.mfpt_paths = get(v, "mfpt_paths", s.mfpt_paths, "validate");
		s.mfpt_dt = get(v, "mfpt_dt", s.mfpt_dt, "validate");
		s.max_mfpt_rel = get(v, "max_mfpt_rel", s.max_mfpt_rel, "validate");
		positive(s.max_n, "validate.max_n");
		positive(s.cycles, "validate.cycles");
		positive(s.trials, "validate.trials");
		positive(s.mfpt_paths, "validate.mfpt_paths");
		for (double t : s.mfpt_targets)
			if (!(t > 0.0 && t < 1.0))
				throw ConfigError("validate.mfpt_targets must lie in (0, 1)");
		c.validate = s;
	}
	return c;
}

inline json to_json(const ExperimentConfig &c)
{
	using namespace detail;
	json j;
	j["experiment"] = c.experiment;
	j["seed"] = c.seed;
	j["dt"] = c.dt;
	j["neuron"] = json{{"tau_m", c.neuron.tau_m},         {"u_rest", c.neuron.u_rest},
	                   {"u_thresh", c.neuron.u_thresh},   {"resistance", c.neuron.resistance},
	                   {"tau_alpha", c.neuron.tau_alpha}, {"delta_alpha", c.neuron.delta_alpha}};
	j["rhythm"] = json{{"T_W", c.rhythm.T_W}};
	if (c.transfer) {
		const auto &s = *c.transfer;
		j["transfer"] = json{{"grid", write_grid(s.grid)}, {"trials", s.trials}, {"gamma", s.gamma},
		                     {"regimes", write_regimes(s.regimes)}};
	}
	if (c.raster) {
		const auto &s = *c.raster;
		json groups = json::array();
		for (const auto &g : s.groups)
			groups.push_back(json{{"count", g.count}, {"i_o", g.i_o}});
		j["raster"] = json{{"groups", groups}, {"cycles", s.cycles}, {"noise", write_noise(s.noise)}};
		j["raster"]["switch_time"] = s.switch_time ? json(*s.switch_time) : json(nullptr);
		j["raster"]["after"] = write_noise(s.after);
	}
	if (c.xor_net) {
		const auto &s = *c.xor_net;
		j["xor"] = json{{"weights",
		                 {{"and_in", s.weights.and_in},
		                  {"or_in", s.weights.or_in},
		                  {"excite", s.weights.excite},
		                  {"inhibit", s.weights.inhibit},
		                  {"hold", s.weights.hold}}},
		                {"trials", s.trials},
		                {"noise", write_noise(s.noise)}};
	}
	if (c.boltzmann) {
		const auto &s = *c.boltzmann;
		json b;
		b["n"] = s.n;
		b["patterns"] = s.patterns;
		b["sparsity"] = s.sparsity;
		b["min_overlap"] = s.min_overlap;
		b["cycles"] = s.cycles;
		b["start_pattern"] = s.start_pattern ? json(*s.start_pattern) : json(nullptr);
		b["a"] = s.a;
		b["beta"] = s.beta;
		b["dwell_level"] = s.dwell_level;
		b["transition_threshold"] = s.transition_threshold;
		b["hold"] = s.hold;
		b["target_dwell"] = s.target_dwell;
		b["calibration_runs"] = s.calibration_runs;
		b["calibration_cycles"] = s.calibration_cycles;
		b["noise"] = write_noise(s.noise);
		b["mapping_noise"] = write_noise(s.mapping_noise);
		b["mapping_grid"] = write_grid(s.mapping_grid);
		b["mapping_trials"] = s.mapping_trials;
		b["raster"] = s.raster;
		j["boltzmann"] = b;
	}
	if (c.validate) {
		const auto &s = *c.validate;
		json v;
		v["networks"] = s.networks;
		v["max_n"] = s.max_n;
		v["cycles"] = s.cycles;
		v["gamma"] = s.gamma;
		v["regimes"] = write_regimes(s.regimes);
		v["grid"] = write_grid(s.grid);
		v["trials"] = s.trials;
		v["max_temperature_rel"] = s.max_temperature_rel;
		v["mfpt_targets"] = s.mfpt_targets;
		v["mfpt_paths"] = s.mfpt_paths;
		v["mfpt_dt"] = s.mfpt_dt;
		v["max_mfpt_rel"] = s.max_mfpt_rel;
		j["validate"] = v;
	}
	return j;
}

inline ExperimentConfig parse_config_text(const std::string &text)
{
	json j;
	try {
		j = json::parse(text);
	} catch (const json::parse_error &e) {
		throw ConfigError(std::string("config parse error: ") + e.what());
	}
	return parse_config(j);
}

inline ExperimentConfig load_config(const std::string &path)
{
	std::ifstream in(path);
	if (!in)
		throw ConfigError("cannot open config file: " + path);
	std::stringstream ss;
	ss << in.rdbuf();
	return parse_config_text(ss.str());
}

// FNV-1a over the canonical serialization.
inline std::string config_hash(const ExperimentConfig &c)
{
	const std::string text = to_json(c).dump();
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char ch : text) {
		h ^= ch;
		h *= 0x100000001b3ULL;
	}
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
	return buf;
}

} // namespace stochspike::cli
