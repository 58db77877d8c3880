#pragma once

/*
 * Leaky integrate-and-fire neuron with a spike-triggered adaptation current.
 *
 *    tau_m     du/dt     = u_rest - u + R (I(t) - I_alpha(t))
 *    tau_alpha dI_alpha/dt = -I_alpha + delta_alpha * sum_f delta(t - t_f)
 *
 * Between grid points the drive I is constant and the pair (u, I_alpha) is
 * advanced with the exact solution of this linear system, so the only
 * dependence on dt comes from quantizing input impulses and threshold checks
 * to the grid. Input impulses are membrane-potential jumps (du = w).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochspike {

struct NeuronParams {
	double tau_m = 2.0;        // ms
	double u_rest = 0.0;       // reset and resting potential
	double u_thresh = 1.0;
	double resistance = 1.0;
	double tau_alpha = 15.0;   // ms
	double delta_alpha = 150.0;

	void validate() const
	{
		if (!(tau_m > 0.0) || !(tau_alpha > 0.0) || !(resistance > 0.0))
			throw std::invalid_argument("neuron: tau_m, tau_alpha and resistance must be positive");
		if (!(u_thresh > u_rest))
			throw std::invalid_argument("neuron: u_thresh must exceed u_rest");
		if (!(delta_alpha >= 0.0))
			throw std::invalid_argument("neuron: delta_alpha must be nonnegative");
	}
};

struct NeuronState {
	double u = 0.0;
	double i_alpha = 0.0;
	std::optional<double> last_spike;
	bool spiked_in_window = false;

	static NeuronState at_rest(const NeuronParams &p) { return NeuronState{p.u_rest, 0.0, std::nullopt, false}; }
};

// A delta-function input, expressed directly as the membrane jump it causes.
struct Impulse {
	double time;
	double jump;
};

// Converts a delta-current of charge q into the membrane jump R q / tau_m.
inline double charge_to_jump(const NeuronParams &p, double charge) { return p.resistance * charge / p.tau_m; }

struct TracePoint {
	double t;
	double u;
};

struct WindowResult {
	bool on = false;
	std::vector<double> spike_times;
	std::vector<TracePoint> trace;   // empty unless requested
};

class SimulationFault : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

// e_g = u_t - R I_o; negative when the drive is already suprathreshold.
inline double bandgap(const NeuronParams &p, double i_const) { return p.u_thresh - p.resistance * i_const; }

// Precomputed exact propagator for a fixed step dt.
class Integrator {
public:
	Integrator(const NeuronParams &p, double dt) : p_(p), dt_(dt)
	{
		p.validate();
		if (!(dt > 0.0))
			throw std::invalid_argument("neuron: dt must be positive");
		decay_m_ = std::exp(-dt / p.tau_m);
		decay_a_ = std::exp(-dt / p.tau_alpha);
		// Response of u to a unit adaptation current decaying over the step.
		if (std::abs(p.tau_alpha - p.tau_m) > 1e-12 * p.tau_m)
			cross_ = -p.resistance * p.tau_alpha / (p.tau_alpha - p.tau_m) * (decay_a_ - decay_m_);
		else
			cross_ = -p.resistance * (dt / p.tau_m) * decay_m_;
		reset_jump_ = p.delta_alpha / p.tau_alpha;
	}

	const NeuronParams &params() const { return p_; }
	double dt() const { return dt_; }

	// Advances by one step with constant drive, then applies `jump` at the end
	// of the step and tests the threshold. Returns true if the neuron spiked
	// (state is then reset and adaptation incremented).
	bool advance(NeuronState &s, double drive, double jump) const
	{
		const double asym = p_.u_rest + p_.resistance * drive;
		double u = asym + (s.u - asym) * decay_m_;
		if (s.i_alpha != 0.0) {
			u += cross_ * s.i_alpha;
			s.i_alpha *= decay_a_;
		}
		u += jump;
		if (!std::isfinite(u) || !std::isfinite(s.i_alpha))
			throw SimulationFault("neuron: non-finite membrane state (parameter blow-up)");
		if (u > p_.u_thresh) {
			s.u = p_.u_rest;
			s.i_alpha += reset_jump_;
			s.spiked_in_window = true;
			return true;
		}
		s.u = u;
		return false;
	}

private:
	NeuronParams p_;
	double dt_;
	double decay_m_ = 0.0;
	double decay_a_ = 0.0;
	double cross_ = 0.0;
	double reset_jump_ = 0.0;
};

// One exact step from t to t + dt. Impulses are taken to arrive at the end of
// the step (their grid-quantized time); their jumps are summed.
inline NeuronState step(const NeuronParams &params, NeuronState state, double i_const,
                        std::span<const Impulse> impulses, double dt, double t = 0.0)
{
	Integrator integ(params, dt);
	double jump = 0.0;
	for (const auto &imp : impulses)
		jump += imp.jump;
	if (integ.advance(state, i_const, jump))
		state.last_spike = t + dt;
	return state;
}

// Number of steps spanning a window. The window must be an integer number of
// steps long.
inline std::size_t window_steps(double T_W, double dt)
{
	if (!(T_W > 0.0) || !(dt > 0.0))
		throw std::invalid_argument("window: T_W and dt must be positive");
	const double ratio = T_W / dt;
	const double n = std::round(ratio);
	if (n < 2.0 || std::abs(ratio - n) > 1e-9 * n)
		throw std::invalid_argument("window: T_W must be an integer multiple (>= 2) of dt");
	return static_cast<std::size_t>(n);
}

// Grid index of an event at time t relative to the window start; snaps to
// the nearest interior grid point 1..n-1. The window's end points belong to
// the surrounding reset phases.
inline std::size_t snap_to_grid(double t_rel, double dt, std::size_t n)
{
	const double m = std::round(t_rel / dt);
	if (m < 1.0)
		return 1;
	if (m > static_cast<double>(n - 1))
		return n - 1;
	return static_cast<std::size_t>(m);
}

// A step change of the drive current at a given time (used for synaptic
// pulse onsets and offsets that fall inside a window).
struct DriveChange {
	double time;
	double delta;
};

struct WindowInput {
	double drive = 0.0;                   // constant drive at window start
	std::span<const DriveChange> changes; // sorted by time
	std::span<const Impulse> impulses;    // sorted by time
};

// Integrates one window that opens at `start` with the neuron at rest and
// spans the open interval (start, start + n*dt). Spike times are absolute.
// With stop_at_first the window ends at the first spike (the binary outcome
// and first spike time are unchanged).
inline WindowResult integrate_window(const Integrator &integ, double start, std::size_t n,
                                     const WindowInput &in, bool record_trace = false, bool stop_at_first = false)
{
	const auto &p = integ.params();
	const double dt = integ.dt();
	WindowResult res;
	NeuronState s = NeuronState::at_rest(p);
	double drive = in.drive;
	std::size_t next_change = 0;
	std::size_t next_imp = 0;
	if (record_trace) {
		res.trace.reserve(n + 1);
		res.trace.push_back({start, s.u});
	}
	for (std::size_t m = 1; m < n; ++m) {
		// A drive change takes effect for every step that begins at or after
		// the grid point nearest its time.
		while (next_change < in.changes.size() &&
		       std::round((in.changes[next_change].time - start) / dt) <= static_cast<double>(m - 1)) {
			drive += in.changes[next_change].delta;
			++next_change;
		}
		double jump = 0.0;
		while (next_imp < in.impulses.size() && snap_to_grid(in.impulses[next_imp].time - start, dt, n) <= m) {
			jump += in.impulses[next_imp].jump;
			++next_imp;
		}
		const bool spiked = integ.advance(s, drive, jump);
		const double t = start + static_cast<double>(m) * dt;
		if (spiked) {
			res.spike_times.push_back(t);
			s.last_spike = t;
			if (stop_at_first && !record_trace)
				break;
		}
		if (record_trace)
			res.trace.push_back({t, spiked ? 2.0 * p.u_thresh : s.u});
	}
	if (record_trace)
		res.trace.push_back({start + static_cast<double>(n) * dt, s.u});
	res.on = !res.spike_times.empty();
	return res;
}

// Single isolated window starting at t = 0 from rest with constant drive and
// the given impulses (times in (0, T_W)).
inline WindowResult simulate_window(const NeuronParams &params, double i_const, std::span<const Impulse> impulses,
                                    double T_W, double dt, bool record_trace = false)
{
	Integrator integ(params, dt);
	const std::size_t n = window_steps(T_W, dt);
	return integrate_window(integ, 0.0, n, WindowInput{i_const, {}, impulses}, record_trace);
}

} // namespace stochspike
