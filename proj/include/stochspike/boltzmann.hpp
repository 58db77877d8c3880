#pragma once

/*
 * Single-layer Boltzmann machine built from clocked spiking neurons.
 *
 * Stored binary patterns V^s enter through the outer-product rule in +-1
 * coding, w_ij = sum_s (2V_i^s - 1)(2V_j^s - 1), w_ii = 0. For sparse patterns
 * that rule carries a strong positive activity feedback (a unit in no pattern
 * receives +4 per active unit in the complement of the patterns), so a plain
 * zero threshold does not hold the patterns. The field used here is
 *
 *    h_i = sum_j w_ij s_j - a R_i - beta (A - K) - c,
 *
 * with R_i the row sum, A the number of other active units and K the pattern
 * ones-count: `a` removes the mean row input, `beta` is a uniform inhibitory
 * coupling and `c` centres the on/off margins of the stored patterns.
 * Units turn on with probability 1 / (1 + exp(-h_i / T_B)).
 *
 * On the spiking side, a neuron with logistic transfer midpoint x_mid and
 * temperature T_fit receives the current x_mid + g h_i with g = T_fit / T_B.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "network.hpp"
#include "rng.hpp"
#include "thermometry.hpp"

namespace stochspike {

using Pattern = std::vector<std::uint8_t>;

struct PatternSet {
	std::size_t n = 0;
	std::size_t ones = 0;
	double sparsity = 0.75;      // fraction of zeros
	double min_overlap = 0.30;   // fraction of coinciding ones
	std::vector<Pattern> patterns;

	std::size_t size() const { return patterns.size(); }
};

inline std::size_t shared_ones(const Pattern &a, const Pattern &b)
{
	std::size_t c = 0;
	for (std::size_t i = 0; i < a.size(); ++i)
		c += (a[i] & b[i]);
	return c;
}

inline double overlap_fraction(const Pattern &a, const Pattern &b, std::size_t ones)
{
	return ones == 0 ? 0.0 : static_cast<double>(shared_ones(a, b)) / static_cast<double>(ones);
}

inline std::size_t ones_for(std::size_t n, double sparsity)
{
	return static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - sparsity)));
}

namespace detail {

// Uniform random subset of size k via a partial Fisher-Yates shuffle. Index
// draws use uniform01 so the result does not depend on the standard library.
inline Pattern random_pattern(std::size_t n, std::size_t k, Engine &eng)
{
	std::vector<std::size_t> idx(n);
	std::iota(idx.begin(), idx.end(), std::size_t{0});
	Pattern v(n, 0);
	for (std::size_t i = 0; i < k; ++i) {
		const auto span = static_cast<double>(n - i);
		const std::size_t j = i + std::min(static_cast<std::size_t>(uniform01(eng) * span), n - i - 1);
		std::swap(idx[i], idx[j]);
		v[idx[i]] = 1;
	}
	return v;
}

inline bool overlap_ok(const std::vector<Pattern> &ps, std::size_t need)
{
	for (std::size_t a = 0; a < ps.size(); ++a) {
		bool partner = ps.size() == 1;
		for (std::size_t b = 0; b < ps.size(); ++b) {
			if (a == b)
				continue;
			if (ps[a] == ps[b])
				return false;
			if (shared_ones(ps[a], ps[b]) >= need)
				partner = true;
		}
		if (!partner)
			return false;
	}
	return true;
}

} // namespace detail

// Rejection-samples patterns with an exact ones-count until each pattern
// shares at least min_overlap of its ones with some other pattern.
inline PatternSet generate_patterns(std::size_t n, std::size_t n_patterns, double sparsity, double min_overlap,
                                    const RngStreamKey &key, std::size_t max_attempts = 100000)
{
	if (n == 0 || n_patterns == 0)
		throw ConfigError("patterns: n and pattern count must be positive");
	if (!(sparsity > 0.0 && sparsity < 1.0))
		throw ConfigError("patterns: sparsity must lie in (0, 1)");
	if (!(min_overlap >= 0.0 && min_overlap <= 1.0))
		throw ConfigError("patterns: min_overlap must lie in [0, 1]");
	PatternSet set{n, ones_for(n, sparsity), sparsity, min_overlap, {}};
	if (set.ones == 0 || set.ones == n)
		throw ConfigError("patterns: sparsity leaves no free units");
	const auto need = static_cast<std::size_t>(std::ceil(min_overlap * static_cast<double>(set.ones) - 1e-9));
	Engine eng = make_engine(key);
	for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
		set.patterns.clear();
		for (std::size_t s = 0; s < n_patterns; ++s)
			set.patterns.push_back(detail::random_pattern(n, set.ones, eng));
		if (detail::overlap_ok(set.patterns, need))
			return set;
	}
	throw ConfigError("patterns: overlap constraint not met after bounded resampling");
}

inline WeightMatrix hopfield_weights(const PatternSet &p)
{
	WeightMatrix w(p.n);
	for (const auto &v : p.patterns)
		for (std::size_t i = 0; i < p.n; ++i) {
			const double xi = 2.0 * v[i] - 1.0;
			for (std::size_t j = 0; j < p.n; ++j)
				if (i != j)
					w(i, j) += xi * (2.0 * v[j] - 1.0);
		}
	return w;
}

// Normalized overlap in +-1 coding, m_s = (1/N) sum_i (2s_i - 1)(2V_i^s - 1).
inline std::vector<double> correlate(const std::vector<std::uint8_t> &state, const PatternSet &p)
{
	if (state.size() != p.n)
		throw std::invalid_argument("correlate: length mismatch");
	std::vector<double> m;
	m.reserve(p.size());
	for (const auto &v : p.patterns) {
		long acc = 0;
		for (std::size_t i = 0; i < p.n; ++i)
			acc += (state[i] == v[i]) ? 1 : -1;
		m.push_back(static_cast<double>(acc) / static_cast<double>(p.n));
	}
	return m;
}

struct FieldModel {
	double a = 0.35;
	double beta = 1.0;
	double c = 0.0;
	double margin = 0.0;   // half the gap between weakest on and strongest off unit
	std::size_t k = 0;
	WeightMatrix w;
	std::vector<double> row_sum;

	double field(const std::vector<std::uint8_t> &s, std::size_t i) const
	{
		double h = 0.0;
		std::size_t active = 0;
		for (std::size_t j = 0; j < w.n; ++j)
			if (s[j] && j != i) {
				h += w(i, j);
				++active;
			}
		return h - a * row_sum[i] - beta * (static_cast<double>(active) - static_cast<double>(k)) - c;
	}

	// Uniform-inhibition form: effective couplings and per-unit bias.
	double coupling(std::size_t i, std::size_t j) const { return i == j ? 0.0 : w(i, j) - beta; }
	double bias(std::size_t i) const { return -a * row_sum[i] + beta * static_cast<double>(k) - c; }
};

// Builds the field model and centres c between the weakest on-unit and the
// strongest off-unit over all stored patterns.
inline FieldModel make_field_model(const PatternSet &p, double a = 0.35, double beta = 1.0)
{
	FieldModel m;
	m.a = a;
	m.beta = beta;
	m.k = p.ones;
	m.w = hopfield_weights(p);
	m.row_sum.assign(p.n, 0.0);
	for (std::size_t i = 0; i < p.n; ++i)
		for (std::size_t j = 0; j < p.n; ++j)
			m.row_sum[i] += m.w(i, j);
	double on_min = std::numeric_limits<double>::infinity();
	double off_max = -std::numeric_limits<double>::infinity();
	for (const auto &v : p.patterns)
		for (std::size_t i = 0; i < p.n; ++i) {
			const double h = m.field(v, i);
			if (v[i])
				on_min = std::min(on_min, h);
			else
				off_max = std::max(off_max, h);
		}
	m.c = 0.5 * (on_min + off_max);
	m.margin = 0.5 * (on_min - off_max);
	return m;
}

inline TwoStateNetwork two_state_boltzmann(const FieldModel &m, double temperature)
{
	TwoStateNetwork net;
	net.n = m.w.n;
	net.w.assign(net.n * net.n, 0.0);
	net.bias.assign(net.n, 0.0);
	net.threshold.assign(net.n, 0.0);
	net.temperature = temperature;
	net.s.assign(net.n, 0);
	for (std::size_t i = 0; i < net.n; ++i) {
		net.bias[i] = m.bias(i);
		for (std::size_t j = 0; j < net.n; ++j)
			net.w[i * net.n + j] = m.coupling(i, j);
	}
	return net;
}

// Every stored pattern is a fixed point of the zero-temperature update.
inline bool patterns_stable(const FieldModel &m, const PatternSet &p)
{
	auto net = two_state_boltzmann(m, 0.0);
	Engine unused = make_engine({});
	for (const auto &v : p.patterns) {
		net.s = v;
		if (two_state_step(net, unused) != v)
			return false;
	}
	return true;
}

// Pattern sets failing the zero-temperature check are resampled.
inline PatternSet generate_stable_patterns(std::size_t n, std::size_t n_patterns, double sparsity, double min_overlap,
                                           const RngStreamKey &key, double a = 0.35, double beta = 1.0,
                                           std::size_t max_attempts = 100)
{
	for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
		auto set = generate_patterns(n, n_patterns, sparsity, min_overlap, key.with_trial(attempt));
		if (patterns_stable(make_field_model(set, a, beta), set))
			return set;
	}
	throw ConfigError("patterns: no stable pattern set within the attempt limit");
}

struct Transition {
	std::size_t cycle;
	std::size_t from;
	std::size_t to;
	double correlation;

	friend bool operator==(const Transition &, const Transition &) = default;
};

// A new argmax pattern counts once it has held with correlation above the
// threshold for `hold` consecutive cycles.
class TransitionDetector {
public:
	TransitionDetector(double threshold = 0.6, std::size_t hold = 2, std::optional<std::size_t> current = std::nullopt)
	    : threshold_(threshold), hold_(hold), current_(current)
	{
	}

	std::optional<Transition> feed(std::size_t cycle, const std::vector<double> &m)
	{
		const auto it = std::max_element(m.begin(), m.end());
		const auto arg = static_cast<std::size_t>(it - m.begin());
		if (*it <= threshold_ || (current_ && arg == *current_)) {
			run_ = 0;
			return std::nullopt;
		}
		if (run_ > 0 && arg == candidate_)
			++run_;
		else {
			candidate_ = arg;
			run_ = 1;
		}
		if (run_ < hold_)
			return std::nullopt;
		run_ = 0;
		const auto prev = current_;
		current_ = arg;
		if (!prev)
			return std::nullopt;   // first acquisition
		return Transition{cycle, *prev, arg, *it};
	}

	std::optional<std::size_t> current() const { return current_; }

private:
	double threshold_;
	std::size_t hold_;
	std::optional<std::size_t> current_;
	std::size_t candidate_ = 0;
	std::size_t run_ = 0;
};

struct CorrelationRecord {
	std::size_t k;
	std::vector<double> m;
	std::size_t argmax;
	bool is_transition;
};

struct HoppingStats {
	double dwell = 0.0;   // fraction of cycles with max correlation above dwell_level
	std::vector<Transition> transitions;
};

struct HoppingOptions {
	double dwell_level = 0.8;
	double transition_threshold = 0.6;
	std::size_t hold = 2;
};

// Two-state Boltzmann run from a stored pattern.
inline HoppingStats run_two_state_boltzmann(const FieldModel &m, const PatternSet &p, double temperature,
                                            std::size_t start, std::size_t n_cycles, Engine &eng,
                                            const HoppingOptions &opt = {})
{
	auto net = two_state_boltzmann(m, temperature);
	net.s = p.patterns.at(start);
	TransitionDetector det(opt.transition_threshold, opt.hold, start);
	HoppingStats st;
	std::size_t dwell = 0;
	for (std::size_t k = 1; k <= n_cycles; ++k) {
		net.s = two_state_step(net, eng);
		const auto corr = correlate(net.s, p);
		if (*std::max_element(corr.begin(), corr.end()) > opt.dwell_level)
			++dwell;
		if (auto t = det.feed(k, corr))
			st.transitions.push_back(*t);
	}
	st.dwell = static_cast<double>(dwell) / static_cast<double>(n_cycles);
	return st;
}

struct CalibrationOptions {
	double target_dwell = 0.7;
	std::size_t runs = 6;
	std::size_t cycles = 500;
	std::size_t iterations = 12;
	double lo = 0.05;   // search bracket in units of the pattern margin
	double hi = 1.0;
};

// Boltzmann temperature T_B (in weight units) at which two-state runs from
// the stored patterns spend the target fraction of cycles near a pattern.
// Dwell falls with temperature; bisection on the mean over seeded runs.
inline double calibrate_temperature(const FieldModel &m, const PatternSet &p, const RngStreamKey &key,
                                    const CalibrationOptions &opt = {})
{
	if (!(m.margin > 0.0))
		throw ConfigError("calibration: stored patterns are not separated by the field model");
	double lo = opt.lo * m.margin;
	double hi = opt.hi * m.margin;
	for (std::size_t it = 0; it < opt.iterations; ++it) {
		const double t = 0.5 * (lo + hi);
		double dwell = 0.0;
		for (std::size_t r = 0; r < opt.runs; ++r) {
			Engine eng = make_engine(key.with_trial(it * 1000 + r));
			dwell += run_two_state_boltzmann(m, p, t, r % p.size(), opt.cycles, eng).dwell;
		}
		dwell /= static_cast<double>(opt.runs);
		(dwell > opt.target_dwell ? lo : hi) = t;
	}
	return 0.5 * (lo + hi);
}

// Current-unit weights and drives for the spiking network. x_mid and t_fit
// describe the single-neuron logistic transfer function of the noise regime.
inline WeightMatrix spiking_weights(const FieldModel &m, double t_boltzmann, double x_mid, double t_fit)
{
	if (!(t_boltzmann > 0.0) || !(t_fit > 0.0))
		throw ConfigError("boltzmann: temperatures must be positive");
	const double g = t_fit / t_boltzmann;
	WeightMatrix out(m.w.n);
	for (std::size_t i = 0; i < m.w.n; ++i) {
		out.drive[i] = x_mid + g * m.bias(i);
		for (std::size_t j = 0; j < m.w.n; ++j)
			out(i, j) = g * m.coupling(i, j);
	}
	return out;
}

struct BoltzmannRun {
	std::vector<CorrelationRecord> trace;
	std::vector<Transition> transitions;
	std::vector<SpikeRecord> raster;
	double dwell = 0.0;
};

inline BoltzmannRun run_boltzmann(const WeightMatrix &w, const PatternSet &p, const NoiseSchedule &noise,
                                  const RhythmConfig &rhythm, const NeuronParams &params, std::size_t n_cycles,
                                  const RngStreamKey &key, std::optional<std::size_t> start = 0,
                                  const HoppingOptions &opt = {}, bool record_raster = false, double dt = 0.01)
{
	if (w.n != p.n)
		throw ConfigError("boltzmann: weight matrix and patterns disagree in size");
	BoltzmannRun out;
	out.trace.reserve(n_cycles);
	TransitionDetector det(opt.transition_threshold, opt.hold, start);
	std::size_t dwell = 0;
	NetworkOptions nopt;
	nopt.dt = dt;
	if (start)
		nopt.initial = p.patterns.at(*start);
	nopt.keep_cycles = false;
	nopt.record_raster = record_raster;
	nopt.on_cycle = [&](const CycleState &st) {
		auto corr = correlate(st.s, p);
		const auto it = std::max_element(corr.begin(), corr.end());
		if (*it > opt.dwell_level)
			++dwell;
		const auto t = det.feed(st.k, corr);
		if (t)
			out.transitions.push_back(*t);
		out.trace.push_back({st.k, corr, static_cast<std::size_t>(it - corr.begin()), t.has_value()});
	};
	auto run = run_network(w, rhythm, noise, params, n_cycles, key, std::move(nopt));
	out.raster = std::move(run.raster);
	out.dwell = static_cast<double>(dwell) / static_cast<double>(n_cycles);
	return out;
}

} // namespace stochspike
