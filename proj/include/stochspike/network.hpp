#pragma once

/*
 * Networks of integrate-and-fire neurons clocked by a global square-wave
 * inhibitory rhythm.
 *
 * With window length T_W the rhythm has period 2 T_W. Discrete step k >= 1
 * is the open interval ((2k - 1) T_W, 2k T_W); everything else, including the
 * interval end points, is an inhibited (reset) phase in which membrane and
 * adaptation are clamped to rest. A spike at t_f sends a rectangular current
 * pulse of amplitude w_jp to every target on [t_f + T_W, t_f + 3 T_W), which
 * covers exactly the following window. At zero noise the windowed binary
 * states then follow the synchronous two-state update
 *
 *    s_j(k) = [ I_j + sum_p w_jp s_p(k-1) > x_t ].
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "neuron.hpp"
#include "poisson.hpp"
#include "rng.hpp"

namespace stochspike {

struct RhythmConfig {
	double T_W = 15.0;   // ms; period 2 T_W (15 ms -> 33 Hz)

	double window_start(std::size_t k) const { return (2.0 * static_cast<double>(k) - 1.0) * T_W; }
	double window_end(std::size_t k) const { return 2.0 * static_cast<double>(k) * T_W; }
};

struct RhythmPhase {
	bool in_window = false;
	std::size_t k = 0;   // window index when in_window

	friend bool operator==(const RhythmPhase &, const RhythmPhase &) = default;
};

inline RhythmPhase rhythm_phase(double t, const RhythmConfig &cfg)
{
	if (!(t >= 0.0))
		throw std::invalid_argument("rhythm_phase: t must be nonnegative");
	const double half = t / cfg.T_W;
	const double idx = std::floor(half);
	// Odd half-periods are windows; the boundary itself is inhibited.
	if (static_cast<std::uint64_t>(idx) % 2 == 1 && half > idx)
		return {true, static_cast<std::size_t>(idx + 1.0) / 2};
	return {false, 0};
}

// n x n synaptic weights, w(j, p) being the weight from p onto j, plus the
// constant external drive of each neuron.
struct WeightMatrix {
	std::size_t n = 0;
	std::vector<double> w;       // row-major, n*n
	std::vector<double> drive;   // n

	WeightMatrix() = default;
	explicit WeightMatrix(std::size_t size) : n(size), w(size * size, 0.0), drive(size, 0.0) {}

	double &operator()(std::size_t j, std::size_t p) { return w[j * n + p]; }
	double operator()(std::size_t j, std::size_t p) const { return w[j * n + p]; }

	void validate() const
	{
		if (w.size() != n * n || drive.size() != n)
			throw std::invalid_argument("weights: shape mismatch");
		for (double v : w)
			if (!std::isfinite(v))
				throw std::invalid_argument("weights: non-finite entry");
		for (double v : drive)
			if (!std::isfinite(v))
				throw std::invalid_argument("weights: non-finite drive");
	}
};

struct SynapticPulse {
	std::size_t source = 0;
	std::size_t target = 0;
	double onset = 0.0;
	double offset = 0.0;
	double amplitude = 0.0;

	double at(double t) const { return (t >= onset && t < offset) ? amplitude : 0.0; }
};

// Pulses generated by a spike of neuron p at t_f: one per nonzero weight in
// column p, delayed by T_W and lasting 2 T_W.
inline std::vector<SynapticPulse> schedule_pulse(std::size_t p, double t_f, const WeightMatrix &w, double T_W)
{
	std::vector<SynapticPulse> out;
	for (std::size_t j = 0; j < w.n; ++j) {
		const double a = w(j, p);
		if (a != 0.0)
			out.push_back({p, j, t_f + T_W, t_f + 3.0 * T_W, a});
	}
	return out;
}

struct CycleState {
	std::size_t k = 0;
	std::vector<std::uint8_t> s;

	friend bool operator==(const CycleState &, const CycleState &) = default;
};

struct SpikeRecord {
	std::size_t cycle;
	std::size_t neuron;
	double time;

	friend bool operator==(const SpikeRecord &, const SpikeRecord &) = default;
};

// Background noise, optionally switching to a second regime at a given time.
struct NoiseSchedule {
	NoiseConfig initial;
	std::optional<double> switch_time;
	NoiseConfig after;

	static NoiseSchedule constant(const NoiseConfig &cfg) { return {cfg, std::nullopt, cfg}; }
	const NoiseConfig &at(double t) const { return (switch_time && t >= *switch_time) ? after : initial; }
};

// Membrane trace of one neuron over one window, with the total synaptic
// plus external current at the window centre.
struct WindowTrace {
	std::size_t cycle;
	std::size_t neuron;
	double current;
	std::vector<TracePoint> points;
};

struct NetworkRun {
	std::vector<CycleState> cycles;
	std::vector<SpikeRecord> raster;   // ordered by cycle, then neuron, then time
	std::vector<WindowTrace> traces;
};

// Per-cycle external drive override: (cycle k, neuron j) -> current.
using DriveSchedule = std::function<double(std::size_t, std::size_t)>;

struct NetworkOptions {
	double dt = 0.01;
	std::optional<std::vector<std::uint8_t>> initial;   // s(0), delivered as pulses into window 1
	DriveSchedule drive;                                 // defaults to WeightMatrix::drive
	// Called after every cycle with the freshly computed state.
	std::function<void(const CycleState &)> on_cycle;
	bool keep_cycles = true;
	bool record_raster = true;
	bool record_traces = false;
};

// Effective two-state threshold of the clocked neuron: with constant drive I
// a window produces a spike iff I > x_t.
inline double effective_threshold(const NeuronParams &p, double T_W, double dt)
{
	const std::size_t n = window_steps(T_W, dt);
	const double t_last = static_cast<double>(n - 1) * dt;
	return (p.u_thresh - p.u_rest) / (p.resistance * -std::expm1(-t_last / p.tau_m));
}

class ClockedNetwork {
public:
	ClockedNetwork(const WeightMatrix &w, const RhythmConfig &rhythm, const NoiseSchedule &noise,
	               const NeuronParams &params, const RngStreamKey &key, NetworkOptions opts)
	    : w_(w), rhythm_(rhythm), noise_(noise), integ_(params, opts.dt),
	      steps_(window_steps(rhythm.T_W, opts.dt)), opts_(std::move(opts)), pending_(w.n)
	{
		w.validate();
		noise.initial.validate();
		noise.after.validate();
		exc_.reserve(w.n);
		inh_.reserve(w.n);
		for (std::size_t j = 0; j < w.n; ++j) {
			exc_.emplace_back(key.with_neuron(j).with_tag(SourceTag::excitatory), noise.initial.lambda_e);
			inh_.emplace_back(key.with_neuron(j).with_tag(SourceTag::inhibitory), noise.initial.lambda_i);
		}
		if (opts_.initial) {
			if (opts_.initial->size() != w.n)
				throw std::invalid_argument("network: initial state has wrong length");
			// A virtual spike in the middle of window 0 drives window 1.
			const double t_virtual = -0.5 * rhythm.T_W;
			for (std::size_t p = 0; p < w.n; ++p)
				if ((*opts_.initial)[p])
					add_pulses(p, t_virtual);
		}
	}

	std::size_t size() const { return w_.n; }
	std::size_t cycle() const { return k_; }

	// Runs window k+1 and returns its binary state.
	const CycleState &advance(std::vector<SpikeRecord> *raster, std::vector<WindowTrace> *traces = nullptr)
	{
		++k_;
		const double a = rhythm_.window_start(k_);
		const double b = rhythm_.window_end(k_);
		maybe_switch(a);

		state_.k = k_;
		state_.s.assign(w_.n, 0);
		std::vector<std::pair<std::size_t, double>> first_spikes;
		for (std::size_t j = 0; j < w_.n; ++j) {
			collect_noise(j, a, b);
			changes_.clear();
			for (const auto &pl : pending_[j]) {
				if (pl.onset >= b || pl.offset <= a)
					continue;
				changes_.push_back({pl.onset, pl.amplitude});
				changes_.push_back({pl.offset, -pl.amplitude});
			}
			std::sort(changes_.begin(), changes_.end(), [](const DriveChange &x, const DriveChange &y) { return x.time < y.time; });
			const double drive = opts_.drive ? opts_.drive(k_, j) : w_.drive[j];
			auto res = integrate_window(integ_, a, steps_, WindowInput{drive, changes_, impulses_}, traces != nullptr,
			                            raster == nullptr);
			if (traces) {
				double current = drive;
				const double mid = 0.5 * (a + b);
				for (const auto &pl : pending_[j])
					current += pl.at(mid);
				traces->push_back({k_, j, current, std::move(res.trace)});
			}
			if (res.on) {
				state_.s[j] = 1;
				first_spikes.emplace_back(j, res.spike_times.front());
				if (raster)
					for (double t : res.spike_times)
						raster->push_back({k_, j, t});
			}
		}
		for (auto &list : pending_)
			std::erase_if(list, [&](const SynapticPulse &pl) { return pl.offset <= b; });
		// The first spike of a window is the synaptic event carrying s_p(k).
		for (const auto &[p, t] : first_spikes)
			add_pulses(p, t);
		return state_;
	}

private:
	void add_pulses(std::size_t p, double t_f)
	{
		for (std::size_t j = 0; j < w_.n; ++j) {
			const double amp = w_(j, p);
			if (amp != 0.0)
				pending_[j].push_back({p, j, t_f + rhythm_.T_W, t_f + 3.0 * rhythm_.T_W, amp});
		}
	}

	void maybe_switch(double a)
	{
		if (switched_ || !noise_.switch_time || *noise_.switch_time > rhythm_.window_end(k_))
			return;
		// Events before the switch keep the old rate; the renewal restarts at
		// the switch time. Switches inside a window take effect from there.
		const double ts = *noise_.switch_time;
		pre_switch_.assign(w_.n, {});
		for (std::size_t j = 0; j < w_.n; ++j) {
			auto &pre = pre_switch_[j];
			const auto &cfg = noise_.initial;
			exc_[j].drain_until(ts, [&](double t) { if (t > a) pre.push_back({t, cfg.w_e}); });
			inh_[j].drain_until(ts, [&](double t) { if (t > a) pre.push_back({t, -cfg.w_i}); });
			exc_[j].set_rate(noise_.after.lambda_e, ts);
			inh_[j].set_rate(noise_.after.lambda_i, ts);
		}
		switched_ = true;
	}

	void collect_noise(std::size_t j, double a, double b)
	{
		impulses_.clear();
		if (!pre_switch_.empty() && !pre_switch_[j].empty()) {
			impulses_ = std::move(pre_switch_[j]);
			pre_switch_[j].clear();
		}
		const auto &ecfg = switched_ ? noise_.after : noise_.initial;
		exc_[j].drain_until(a, [](double) {});
		inh_[j].drain_until(a, [](double) {});
		exc_[j].drain_until(b, [&](double t) { impulses_.push_back({t, ecfg.w_e}); });
		inh_[j].drain_until(b, [&](double t) { impulses_.push_back({t, -ecfg.w_i}); });
		std::stable_sort(impulses_.begin(), impulses_.end(), [](const Impulse &x, const Impulse &y) { return x.time < y.time; });
	}

	const WeightMatrix &w_;
	RhythmConfig rhythm_;
	NoiseSchedule noise_;
	Integrator integ_;
	std::size_t steps_;
	NetworkOptions opts_;
	std::vector<std::vector<SynapticPulse>> pending_;
	std::vector<PoissonSource> exc_;
	std::vector<PoissonSource> inh_;
	std::vector<std::vector<Impulse>> pre_switch_;
	bool switched_ = false;
	std::vector<DriveChange> changes_;
	std::vector<Impulse> impulses_;
	CycleState state_;
	std::size_t k_ = 0;
};

inline NetworkRun run_network(const WeightMatrix &w, const RhythmConfig &rhythm, const NoiseSchedule &noise,
                              const NeuronParams &params, std::size_t n_cycles, const RngStreamKey &key,
                              NetworkOptions opts = {})
{
	if (n_cycles < 1)
		throw std::invalid_argument("run_network: n_cycles must be >= 1");
	const bool keep = opts.keep_cycles;
	const bool raster = opts.record_raster;
	const bool traces = opts.record_traces;
	auto on_cycle = opts.on_cycle;
	ClockedNetwork net(w, rhythm, noise, params, key, std::move(opts));
	NetworkRun run;
	if (keep)
		run.cycles.reserve(n_cycles);
	for (std::size_t k = 0; k < n_cycles; ++k) {
		const auto &st = net.advance(raster ? &run.raster : nullptr, traces ? &run.traces : nullptr);
		if (on_cycle)
			on_cycle(st);
		if (keep)
			run.cycles.push_back(st);
	}
	return run;
}

// Synchronous two-state network used as the reference for the clocked
// spiking network:
//    x_j = bias_j + sum_p w_jp s_p,  P(s_j = 1) = 1 / (1 + exp(-(x_j - x_t,j) / T)),
// with T = 0 giving the hard rule s_j = [x_j > x_t,j].
struct TwoStateNetwork {
	std::size_t n = 0;
	std::vector<double> w;           // row-major, w[j*n + p]
	std::vector<double> bias;
	std::vector<double> threshold;
	double temperature = 0.0;
	std::vector<std::uint8_t> s;

	static TwoStateNetwork from_weights(const WeightMatrix &wm, double x_t, double temperature = 0.0)
	{
		return {wm.n, wm.w, wm.drive, std::vector<double>(wm.n, x_t), temperature, std::vector<std::uint8_t>(wm.n, 0)};
	}

	double field(std::size_t j) const
	{
		double x = bias[j];
		const double *row = &w[j * n];
		for (std::size_t p = 0; p < n; ++p)
			if (s[p])
				x += row[p];
		return x;
	}
};

inline std::vector<std::uint8_t> two_state_step(const TwoStateNetwork &net, Engine &eng)
{
	std::vector<std::uint8_t> next(net.n, 0);
	for (std::size_t j = 0; j < net.n; ++j) {
		const double gap = net.field(j) - net.threshold[j];
		if (net.temperature <= 0.0)
			next[j] = gap > 0.0 ? 1 : 0;
		else
			next[j] = uniform01(eng) < 1.0 / (1.0 + std::exp(-gap / net.temperature)) ? 1 : 0;
	}
	return next;
}

inline std::vector<std::uint8_t> two_state_step(const TwoStateNetwork &net, const RngStreamKey &key)
{
	Engine eng = make_engine(key);
	return two_state_step(net, eng);
}

} // namespace stochspike
