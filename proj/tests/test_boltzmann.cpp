#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <stochspike/boltzmann.hpp>
#include <stochspike/validation.hpp>

using namespace stochspike;

namespace {

const NoiseConfig high{14000.0, 17500.0, 0.1, 0.1};

PatternSet small_patterns(std::uint64_t seed)
{
	return generate_stable_patterns(128, 4, 0.75, 0.3, {seed, 0, SourceTag::other, 0});
}

} // namespace

TEST(Patterns, ExactOnesAndOverlap)
{
	const auto set = generate_patterns(128, 4, 0.75, 0.3, {1, 0, SourceTag::other, 0});
	ASSERT_EQ(set.size(), 4u);
	EXPECT_EQ(set.ones, 32u);
	for (const auto &v : set.patterns)
		EXPECT_EQ(std::accumulate(v.begin(), v.end(), std::size_t{0}), 32u);
	for (std::size_t a = 0; a < 4; ++a) {
		double best = 0.0;
		for (std::size_t b = 0; b < 4; ++b)
			if (a != b)
				best = std::max(best, overlap_fraction(set.patterns[a], set.patterns[b], set.ones));
		EXPECT_GE(best, 0.3);
	}
}

TEST(Patterns, SinglePatternIgnoresOverlap)
{
	const auto set = generate_patterns(128, 1, 0.75, 0.9, {2, 0, SourceTag::other, 0});
	EXPECT_EQ(set.size(), 1u);
}

TEST(Patterns, Deterministic)
{
	const RngStreamKey key{3, 0, SourceTag::other, 0};
	EXPECT_EQ(generate_patterns(64, 3, 0.75, 0.3, key).patterns, generate_patterns(64, 3, 0.75, 0.3, key).patterns);
}

TEST(Patterns, InfeasibleRaisesConfigError)
{
	EXPECT_THROW(generate_patterns(128, 4, 0.75, 1.0, {1, 0, SourceTag::other, 0}, 50), ConfigError);
	EXPECT_THROW(generate_patterns(128, 0, 0.75, 0.3, {}), ConfigError);
	EXPECT_THROW(generate_patterns(128, 2, 1.0, 0.3, {}), ConfigError);
}

TEST(Weights, AllOnesPatterns)
{
	PatternSet set{4, 4, 0.0, 0.0, {Pattern(4, 1), Pattern(4, 1)}};
	const auto w = hopfield_weights(set);
	for (std::size_t i = 0; i < 4; ++i)
		for (std::size_t j = 0; j < 4; ++j)
			EXPECT_EQ(w(i, j), i == j ? 0.0 : 2.0);
}

TEST(Weights, SymmetricZeroDiagonal)
{
	const auto set = generate_patterns(64, 3, 0.75, 0.3, {4, 0, SourceTag::other, 0});
	const auto w = hopfield_weights(set);
	for (std::size_t i = 0; i < 64; ++i) {
		EXPECT_EQ(w(i, i), 0.0);
		for (std::size_t j = 0; j < 64; ++j)
			EXPECT_EQ(w(i, j), w(j, i));
	}
}

TEST(Correlation, SelfComplementRandom)
{
	const auto set = generate_patterns(128, 4, 0.75, 0.3, {5, 0, SourceTag::other, 0});
	EXPECT_DOUBLE_EQ(correlate(set.patterns[0], set)[0], 1.0);
	Pattern comp(set.patterns[0]);
	for (auto &v : comp)
		v = 1 - v;
	EXPECT_DOUBLE_EQ(correlate(comp, set)[0], -1.0);
	// Balanced random states are uncorrelated with every pattern up to ~1/sqrt(N).
	Engine eng = make_engine({6, 0, SourceTag::other, 0});
	double mean = 0.0;
	const int reps = 200;
	for (int r = 0; r < reps; ++r) {
		Pattern s(128);
		for (auto &v : s)
			v = uniform01(eng) < 0.5;
		for (double m : correlate(s, set)) {
			EXPECT_LE(std::abs(m), 4.0 / std::sqrt(128.0));
			mean += m / (4.0 * reps);
		}
	}
	EXPECT_LE(std::abs(mean), 3.0 / std::sqrt(128.0 * 4 * reps));
	EXPECT_THROW(correlate(Pattern(3), set), std::invalid_argument);
}

TEST(FieldModel, PatternsAreFixedPoints)
{
	const auto set = small_patterns(7);
	const auto m = make_field_model(set);
	EXPECT_GT(m.margin, 0.0);
	EXPECT_TRUE(patterns_stable(m, set));
	// The coupling/bias form reproduces the field.
	const auto &v = set.patterns[1];
	for (std::size_t i = 0; i < set.n; i += 7) {
		double h = m.bias(i);
		for (std::size_t j = 0; j < set.n; ++j)
			h += m.coupling(i, j) * v[j];
		EXPECT_NEAR(h, m.field(v, i), 1e-9);
	}
}

TEST(Detector, DebounceAndFirstAcquisition)
{
	TransitionDetector det(0.6, 2);
	EXPECT_FALSE(det.feed(1, {0.9, 0.1}));
	EXPECT_FALSE(det.feed(2, {0.9, 0.1}));   // acquisition, not a transition
	EXPECT_EQ(det.current(), 0u);
	EXPECT_FALSE(det.feed(3, {0.1, 0.9}));   // single-cycle excursion
	EXPECT_FALSE(det.feed(4, {0.9, 0.1}));
	EXPECT_FALSE(det.feed(5, {0.1, 0.9}));
	const auto t = det.feed(6, {0.2, 0.8});
	ASSERT_TRUE(t);
	EXPECT_EQ(t->from, 0u);
	EXPECT_EQ(t->to, 1u);
	EXPECT_EQ(t->cycle, 6u);
	EXPECT_FALSE(det.feed(7, {0.5, 0.55}));  // below threshold
}

TEST(Spiking, ZeroNoiseStaysAtPattern)
{
	const auto set = small_patterns(8);
	const auto m = make_field_model(set);
	const auto w = spiking_weights(m, 0.3 * m.margin, 0.74, 0.25);
	for (std::size_t s = 0; s < set.size(); ++s) {
		const auto run = run_boltzmann(w, set, NoiseSchedule::constant({}), {}, {}, 50, {}, s);
		EXPECT_TRUE(run.transitions.empty());
		EXPECT_DOUBLE_EQ(run.dwell, 1.0);
		EXPECT_DOUBLE_EQ(run.trace.back().m[s], 1.0);
	}
}

TEST(Spiking, Deterministic)
{
	const auto set = small_patterns(9);
	const auto m = make_field_model(set);
	const auto w = spiking_weights(m, 0.3 * m.margin, 0.74, 0.25);
	const RngStreamKey key{10, 0, SourceTag::other, 0};
	const auto a = run_boltzmann(w, set, NoiseSchedule::constant(high), {}, {}, 40, key, 0, {}, true);
	const auto b = run_boltzmann(w, set, NoiseSchedule::constant(high), {}, {}, 40, key, 0, {}, true);
	EXPECT_EQ(a.raster, b.raster);
	EXPECT_EQ(a.transitions, b.transitions);
	EXPECT_EQ(a.dwell, b.dwell);
}

TEST(Calibration, DwellFallsWithTemperature)
{
	const auto set = small_patterns(11);
	const auto m = make_field_model(set);
	const RngStreamKey key{12, 0, SourceTag::other, 0};
	Engine e1 = make_engine(key), e2 = make_engine(key);
	const auto cold = run_two_state_boltzmann(m, set, 0.05 * m.margin, 0, 300, e1);
	const auto hot = run_two_state_boltzmann(m, set, 1.0 * m.margin, 0, 300, e2);
	EXPECT_GT(cold.dwell, hot.dwell);
	const double t = calibrate_temperature(m, set, key);
	EXPECT_GT(t, 0.05 * m.margin);
	EXPECT_LT(t, 1.0 * m.margin);
}

TEST(Spiking, ConditionedFlipProbabilitiesMatchLogistic)
{
	// n = 16 machine mapped onto the high-noise regime; compare each unit's
	// firing frequency, conditioned on the previous cycle, with the logistic of
	// its field.
	NeuronParams p;
	const auto set = generate_stable_patterns(16, 2, 0.75, 0.25, {13, 0, SourceTag::other, 0});
	const auto m = make_field_model(set);
	const double t_b = calibrate_temperature(m, set, {14, 0, SourceTag::other, 0});
	const auto curve = measure_transfer(p, high, linear_grid(0.0, 1.6, 0.02), 2000, 15.0, 0.01, {15, 0, SourceTag::other, 0});
	const auto fit = fit_logistic(curve);
	const auto w = spiking_weights(m, t_b, fit.midpoint, fit.temperature);

	const std::size_t cycles = 1000;
	NetworkOptions opt;
	opt.initial = set.patterns[0];
	opt.record_raster = false;
	const auto run = run_network(w, {}, NoiseSchedule::constant(high), p, cycles, {16, 0, SourceTag::other, 0}, opt);

	const int bins = 10;
	std::vector<double> predicted(bins, 0.0), observed(bins, 0.0), count(bins, 0.0);
	std::size_t samples = 0;
	std::vector<std::uint8_t> prev = set.patterns[0];
	for (const auto &c : run.cycles) {
		for (std::size_t i = 0; i < set.n; ++i) {
			const double q = logistic(m.field(prev, i) / t_b);
			const int b = std::min(bins - 1, static_cast<int>(q * bins));
			predicted[b] += q;
			observed[b] += c.s[i];
			count[b] += 1.0;
			++samples;
		}
		prev = c.s;
	}
	EXPECT_GE(samples, 10000u);
	int checked = 0;
	for (int b = 0; b < bins; ++b) {
		if (count[b] < 200.0)
			continue;
		++checked;
		EXPECT_NEAR(observed[b] / count[b], predicted[b] / count[b], 0.05) << "bin " << b << " n " << count[b];
	}
	EXPECT_GE(checked, 2);
}
