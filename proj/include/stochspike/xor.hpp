#pragma once

// Two-layer feed-forward XOR on the clocked network. N1 computes AND and N2
// computes OR of the inputs in window 1; in window 2, N3 fires when N2 fired
// and N1 did not.

#include <array>
#include <cstddef>
#include <stdexcept>

#include "network.hpp"

namespace stochspike {

struct XorWeights {
	double and_in = 0.6;     // each input onto N1
	double or_in = 1.2;      // each input onto N2
	double excite = 1.2;     // N2 -> N3
	double inhibit = -1.2;   // N1 -> N3
	double hold = 30.0;      // ms the input currents stay on

	void validate() const
	{
		if (!(hold > 0.0))
			throw std::invalid_argument("xor: input hold time must be positive");
	}
};

enum XorNeuron : std::size_t { xor_and = 0, xor_or = 1, xor_out = 2 };

inline WeightMatrix xor_network(const XorWeights &x)
{
	WeightMatrix w(3);
	w(xor_out, xor_or) = x.excite;
	w(xor_out, xor_and) = x.inhibit;
	return w;
}

struct XorOutcome {
	bool out = false;
	NetworkRun run;
};

// Inputs are constant currents on [0, hold); a window receives them when it
// lies inside that interval.
inline XorOutcome run_xor(bool in0, bool in1, const XorWeights &x, const NoiseSchedule &noise,
                          const NeuronParams &params, const RhythmConfig &rhythm, const RngStreamKey &key,
                          bool record = false, double dt = 0.01)
{
	x.validate();
	const auto w = xor_network(x);
	const double total = static_cast<double>(in0) + static_cast<double>(in1);
	NetworkOptions opt;
	opt.dt = dt;
	opt.record_raster = record;
	opt.record_traces = record;
	opt.drive = [&](std::size_t k, std::size_t j) {
		if (rhythm.window_end(k) > x.hold)
			return 0.0;
		if (j == xor_and)
			return x.and_in * total;
		if (j == xor_or)
			return x.or_in * total;
		return 0.0;
	};
	XorOutcome res;
	res.run = run_network(w, rhythm, noise, params, 2, key, std::move(opt));
	res.out = res.run.cycles[1].s[xor_out] != 0;
	return res;
}

inline constexpr bool xor_expected(bool a, bool b) { return a != b; }

} // namespace stochspike
