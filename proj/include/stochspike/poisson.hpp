#pragma once

// Seeded Poisson event streams and the noisy input current they compose.
// Rates are in Hz, times in ms.

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "neuron.hpp"
#include "rng.hpp"

namespace stochspike {

constexpr double per_ms(double rate_hz) { return rate_hz * 1e-3; }

struct NoiseConfig {
	double lambda_e = 0.0;   // Hz
	double lambda_i = 0.0;   // Hz
	double w_e = 0.1;        // membrane jump per excitatory event
	double w_i = 0.1;        // membrane jump per inhibitory event

	void validate() const
	{
		if (!(lambda_e >= 0.0) || !(lambda_i >= 0.0) || !(w_e >= 0.0) || !(w_i >= 0.0))
			throw std::invalid_argument("noise: rates and weights must be nonnegative");
	}
	bool silent() const { return (lambda_e == 0.0 || w_e == 0.0) && (lambda_i == 0.0 || w_i == 0.0); }

	friend bool operator==(const NoiseConfig &, const NoiseConfig &) = default;
};

struct PoissonStream {
	std::vector<double> events;   // strictly increasing, in [0, horizon)
	RngStreamKey key;
	double rate = 0.0;            // Hz
};

// Renewal process with exponential gaps. Supports rate changes mid-stream;
// since the process is memoryless the pending gap is simply redrawn.
class PoissonSource {
public:
	PoissonSource() = default;
	PoissonSource(const RngStreamKey &key, double rate_hz, double t0 = 0.0)
	    : eng_(make_engine(key)), rate_(per_ms(rate_hz))
	{
		if (!(rate_hz >= 0.0))
			throw std::invalid_argument("poisson: rate must be nonnegative");
		draw_from(t0);
	}

	void set_rate(double rate_hz, double t)
	{
		rate_ = per_ms(rate_hz);
		draw_from(t);
	}

	double next() const { return next_; }

	// Appends every event in [.., t_end) to `out` and returns the count.
	template <typename F>
	std::size_t drain_until(double t_end, F &&emit)
	{
		std::size_t count = 0;
		while (next_ < t_end) {
			emit(next_);
			++count;
			next_ += exponential(eng_, 1.0 / rate_);
		}
		return count;
	}

private:
	void draw_from(double t)
	{
		next_ = rate_ > 0.0 ? t + exponential(eng_, 1.0 / rate_) : std::numeric_limits<double>::infinity();
	}

	Engine eng_;
	double rate_ = 0.0;
	double next_ = std::numeric_limits<double>::infinity();
};

inline PoissonStream generate_poisson(double rate_hz, double horizon, const RngStreamKey &key)
{
	if (!(horizon > 0.0))
		throw std::invalid_argument("poisson: horizon must be positive");
	PoissonStream s{{}, key, rate_hz};
	PoissonSource src(key, rate_hz);
	src.drain_until(horizon, [&](double t) { s.events.push_back(t); });
	return s;
}

struct ComposedInput {
	double i_const = 0.0;
	std::vector<Impulse> impulses;
};

// I_in(t) = I_o + w_e sum delta(t - t_E) - w_i sum delta(t - t_I).
// Ties in time keep the excitatory event first.
inline ComposedInput compose_input(double i_o, const PoissonStream &exc, const PoissonStream &inh, const NoiseConfig &cfg)
{
	ComposedInput out{i_o, {}};
	out.impulses.reserve(exc.events.size() + inh.events.size());
	auto e = exc.events.begin();
	auto i = inh.events.begin();
	while (e != exc.events.end() || i != inh.events.end()) {
		if (i == inh.events.end() || (e != exc.events.end() && *e <= *i))
			out.impulses.push_back({*e++, cfg.w_e});
		else
			out.impulses.push_back({*i++, -cfg.w_i});
	}
	return out;
}

} // namespace stochspike
