#pragma once

// Cross-module consistency checks: clocked network vs two-state oracle,
// MFPT vs Monte-Carlo first passage, analytic vs fitted temperature.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "network.hpp"
#include "thermometry.hpp"

namespace stochspike {

struct EquivalenceReport {
	std::size_t total = 0;
	std::size_t matches = 0;
	std::vector<std::size_t> mismatched;   // instance indices
};

// Random networks of 1..max_n neurons with weights in [-2, 2], drives in
// [-1, 2] and random initial states, run at zero noise and compared cycle by
// cycle with the synchronous two-state update.
inline EquivalenceReport clocked_equivalence(std::size_t n_networks, std::size_t max_n, std::size_t n_cycles,
                                             const RngStreamKey &key, const NeuronParams &params = {},
                                             const RhythmConfig &rhythm = {}, double dt = 0.01)
{
	EquivalenceReport rep;
	const double x_t = effective_threshold(params, rhythm.T_W, dt);
	for (std::size_t inst = 0; inst < n_networks; ++inst) {
		Engine eng = make_engine(key.with_trial(inst));
		const std::size_t n = 1 + std::min(static_cast<std::size_t>(uniform01(eng) * static_cast<double>(max_n)), max_n - 1);
		WeightMatrix w(n);
		for (auto &v : w.w)
			v = -2.0 + 4.0 * uniform01(eng);
		for (std::size_t j = 0; j < n; ++j)
			w(j, j) = 0.0;
		for (auto &d : w.drive)
			d = -1.0 + 3.0 * uniform01(eng);
		std::vector<std::uint8_t> s0(n);
		for (auto &v : s0)
			v = uniform01(eng) < 0.5 ? 1 : 0;

		NetworkOptions opt;
		opt.dt = dt;
		opt.initial = s0;
		opt.record_raster = false;
		const auto run = run_network(w, rhythm, NoiseSchedule::constant({}), params, n_cycles, key.with_trial(inst), opt);

		auto oracle = TwoStateNetwork::from_weights(w, x_t);
		oracle.s = s0;
		bool same = true;
		for (std::size_t k = 0; k < n_cycles; ++k) {
			oracle.s = two_state_step(oracle, eng);
			same = same && oracle.s == run.cycles[k].s;
		}
		++rep.total;
		if (same)
			++rep.matches;
		else
			rep.mismatched.push_back(inst);
	}
	return rep;
}

struct MfptComparison {
	double target_p = 0.0;
	double i_o = 0.0;
	OUMoments moments;
	double t_mu = 0.0;
	double mc_mean = 0.0;
	std::size_t censored = 0;
	double rel_error = 0.0;
};

// For each target spike probability, picks the drive giving that analytic
// P_spk and compares T_mu with the mean of simulated OU first-passage times.
inline std::vector<MfptComparison> compare_mfpt(const NeuronParams &p, const NoiseConfig &cfg,
                                                const std::vector<double> &targets, std::size_t n_paths, double dt,
                                                double gamma, double T_W, const RngStreamKey &key)
{
	std::vector<MfptComparison> out;
	for (std::size_t k = 0; k < targets.size(); ++k) {
		MfptComparison c;
		c.target_p = targets[k];
		c.i_o = drive_for_probability(p, cfg, targets[k], gamma, T_W);
		c.moments = ou_moments(p, cfg, c.i_o);
		c.t_mu = mfpt(p, c.moments);
		const auto fp = ou_first_passage(p, c.moments, n_paths, dt, 60.0 * c.t_mu + 10.0 * p.tau_m, key.with_neuron(k));
		c.mc_mean = fp.mean();
		c.censored = fp.censored;
		c.rel_error = std::abs(c.t_mu - c.mc_mean) / c.mc_mean;
		out.push_back(c);
	}
	return out;
}

struct TemperatureComparison {
	ThermoEstimate analytic;
	LogisticFit fit;
	TransferCurve curve;
	double rel_diff = 0.0;   // |T_analytic - T_fit| / T_fit
};

inline TemperatureComparison compare_temperature(const NeuronParams &p, const NoiseConfig &cfg,
                                                 const std::vector<double> &grid, std::size_t n_trials, double gamma,
                                                 double T_W, double dt, const RngStreamKey &key)
{
	TemperatureComparison c;
	c.analytic = temperature_analytic(p, cfg, gamma, T_W);
	c.curve = measure_transfer(p, cfg, grid, n_trials, T_W, dt, key);
	c.fit = fit_logistic(c.curve, p.resistance);
	c.analytic.t_fitted = c.fit.temperature;
	c.rel_diff = std::abs(c.analytic.t_analytic - c.fit.temperature) / c.fit.temperature;
	return c;
}

inline std::vector<double> linear_grid(double start, double stop, double step)
{
	if (!(step > 0.0) || !(stop >= start))
		throw std::invalid_argument("grid: need step > 0 and stop >= start");
	std::vector<double> g;
	const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
	for (std::size_t k = 0; k <= n; ++k)
		g.push_back(start + static_cast<double>(k) * step);
	return g;
}

} // namespace stochspike
