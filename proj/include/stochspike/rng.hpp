#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stochspike {

enum class SourceTag : std::uint32_t { excitatory = 0, inhibitory = 1, other = 2 };

// Identifies one independent random stream. Every stochastic quantity in a
// run is drawn from a stream keyed by (experiment seed, neuron, source, trial),
// so results do not depend on the order in which trials or neurons are
// evaluated.
struct RngStreamKey {
	std::uint64_t seed = 0;
	std::uint64_t neuron = 0;
	SourceTag tag = SourceTag::other;
	std::uint64_t trial = 0;

	RngStreamKey with_neuron(std::uint64_t n) const { auto k = *this; k.neuron = n; return k; }
	RngStreamKey with_tag(SourceTag t) const { auto k = *this; k.tag = t; return k; }
	RngStreamKey with_trial(std::uint64_t t) const { auto k = *this; k.trial = t; return k; }

	friend bool operator==(const RngStreamKey &, const RngStreamKey &) = default;
};

using Engine = std::mt19937_64;

inline Engine make_engine(const RngStreamKey &key)
{
	auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
	auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
	std::seed_seq seq{lo(key.seed), hi(key.seed),
	                  lo(key.neuron), hi(key.neuron),
	                  static_cast<std::uint32_t>(key.tag),
	                  lo(key.trial), hi(key.trial)};
	return Engine(seq);
}

// Uniform double in [0, 1) built from the top 53 bits, so the value sequence
// is identical across standard library implementations.
inline double uniform01(Engine &eng)
{
	return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Exponential variate with the given mean, by inversion.
inline double exponential(Engine &eng, double mean)
{
	return -mean * std::log1p(-uniform01(eng));
}

} // namespace stochspike
