#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <stochspike/network.hpp>
#include <stochspike/validation.hpp>
#include <stochspike/xor.hpp>

using namespace stochspike;

namespace {

const NoiseConfig low{920.0, 0.0, 0.1, 0.1};
const NoiseConfig mid{5000.0, 6150.0, 0.1, 0.1};
const NoiseConfig high{14000.0, 17500.0, 0.1, 0.1};

double group_activity(const NetworkRun &run, std::size_t cycle_index, std::size_t from, std::size_t to)
{
	const auto &s = run.cycles[cycle_index].s;
	double on = 0.0;
	for (std::size_t j = from; j < to; ++j)
		on += s[j];
	return on / static_cast<double>(to - from);
}

} // namespace

TEST(Rhythm, PhaseExamples)
{
	const RhythmConfig r{15.0};
	EXPECT_FALSE(rhythm_phase(10.0, r).in_window);
	EXPECT_EQ(rhythm_phase(20.0, r), (RhythmPhase{true, 1}));
	EXPECT_FALSE(rhythm_phase(30.0, r).in_window);
	EXPECT_EQ(rhythm_phase(50.0, r), (RhythmPhase{true, 2}));
	EXPECT_FALSE(rhythm_phase(15.0, r).in_window);
	EXPECT_FALSE(rhythm_phase(0.0, r).in_window);
	EXPECT_THROW(rhythm_phase(-1.0, r), std::invalid_argument);
	EXPECT_EQ(r.window_start(1), 15.0);
	EXPECT_EQ(r.window_end(1), 30.0);
}

TEST(Pulse, ScheduledOneWindowLater)
{
	WeightMatrix w(2);
	w(1, 0) = 0.7;
	const auto pulses = schedule_pulse(0, 20.0, w, 15.0);
	ASSERT_EQ(pulses.size(), 1u);
	EXPECT_EQ(pulses[0].target, 1u);
	EXPECT_EQ(pulses[0].onset, 35.0);
	EXPECT_EQ(pulses[0].offset, 65.0);
	EXPECT_EQ(pulses[0].at(34.999), 0.0);
	EXPECT_EQ(pulses[0].at(35.0), 0.7);
	EXPECT_EQ(pulses[0].at(65.0), 0.0);
}

TEST(Pulse, CoversExactlyTheNextWindow)
{
	const RhythmConfig r{15.0};
	WeightMatrix w(2);
	w(1, 0) = 1.0;
	for (std::size_t k = 1; k <= 4; ++k)
		for (double frac : {0.001, 0.3, 0.999}) {
			const double t_f = r.window_start(k) + frac * r.T_W;
			const auto pl = schedule_pulse(0, t_f, w, r.T_W)[0];
			EXPECT_LE(pl.onset, r.window_start(k + 1));
			EXPECT_GT(pl.onset, r.window_end(k));
			EXPECT_GE(pl.offset, r.window_end(k + 1));
			EXPECT_LT(pl.offset, r.window_start(k + 2));
		}
}

TEST(Clocked, EquivalentToTwoStateUpdate)
{
	const auto rep = clocked_equivalence(100, 8, 20, {17, 0, SourceTag::other, 0});
	EXPECT_EQ(rep.matches, 100u);
	EXPECT_TRUE(rep.mismatched.empty());
}

TEST(Clocked, NoSpikesInInhibitedPhase)
{
	const RhythmConfig r{15.0};
	WeightMatrix w(6);
	for (std::size_t j = 0; j < 6; ++j) {
		w.drive[j] = 0.5 + 0.1 * static_cast<double>(j);
		w((j + 1) % 6, j) = 0.4;
	}
	NetworkOptions opt;
	const auto run = run_network(w, r, NoiseSchedule::constant(high), {}, 30, {4, 0, SourceTag::other, 0}, opt);
	ASSERT_FALSE(run.raster.empty());
	for (const auto &sp : run.raster) {
		const auto ph = rhythm_phase(sp.time, r);
		EXPECT_TRUE(ph.in_window) << sp.time;
		EXPECT_EQ(ph.k, sp.cycle);
	}
}

TEST(Clocked, RasterIsDeterministic)
{
	WeightMatrix w(4);
	for (std::size_t j = 0; j < 4; ++j)
		w.drive[j] = 0.7;
	w(0, 1) = 0.3;
	w(2, 3) = -0.4;
	const RngStreamKey key{8, 0, SourceTag::other, 0};
	const auto a = run_network(w, {}, NoiseSchedule::constant(mid), {}, 25, key);
	const auto b = run_network(w, {}, NoiseSchedule::constant(mid), {}, 25, key);
	EXPECT_EQ(a.raster, b.raster);
	EXPECT_EQ(a.cycles, b.cycles);
	const auto c = run_network(w, {}, NoiseSchedule::constant(mid), {}, 25, {9, 0, SourceTag::other, 0});
	EXPECT_NE(a.raster, c.raster);
}

TEST(Clocked, ZeroDriveZeroNoiseIsSilent)
{
	WeightMatrix w(5);
	const auto run = run_network(w, {}, NoiseSchedule::constant({}), {}, 10, {});
	EXPECT_TRUE(run.raster.empty());
	for (const auto &c : run.cycles)
		for (auto s : c.s)
			EXPECT_EQ(s, 0);
}

TEST(Clocked, ZeroNeuronsIsEmpty)
{
	WeightMatrix w(0);
	const auto run = run_network(w, {}, NoiseSchedule::constant(mid), {}, 5, {});
	EXPECT_TRUE(run.raster.empty());
	EXPECT_EQ(run.cycles.size(), 5u);
}

TEST(Clocked, InitialStateDrivesFirstWindow)
{
	WeightMatrix w(2);
	w(1, 0) = 1.5;
	NetworkOptions opt;
	opt.initial = std::vector<std::uint8_t>{1, 0};
	const auto run = run_network(w, {}, NoiseSchedule::constant({}), {}, 3, {}, opt);
	EXPECT_EQ(run.cycles[0].s, (std::vector<std::uint8_t>{0, 1}));
	EXPECT_EQ(run.cycles[1].s, (std::vector<std::uint8_t>{0, 0}));
}

TEST(Clocked, TracesReportWindowCurrent)
{
	WeightMatrix w(2);
	w.drive = {1.5, 0.2};
	w(1, 0) = 0.5;
	NetworkOptions opt;
	opt.record_traces = true;
	const auto run = run_network(w, {}, NoiseSchedule::constant({}), {}, 2, {}, opt);
	ASSERT_EQ(run.traces.size(), 4u);
	EXPECT_DOUBLE_EQ(run.traces[1].current, 0.2);
	EXPECT_DOUBLE_EQ(run.traces[3].current, 0.7);
	for (const auto &tr : run.traces)
		EXPECT_FALSE(tr.points.empty());
}

TEST(Xor, TruthTableAtZeroNoise)
{
	const XorWeights x;
	for (int a = 0; a < 2; ++a)
		for (int b = 0; b < 2; ++b) {
			const auto res = run_xor(a, b, x, NoiseSchedule::constant({}), {}, {}, {});
			EXPECT_EQ(res.out, xor_expected(a, b)) << a << b;
			// Layer one: AND and OR.
			EXPECT_EQ(res.run.cycles[0].s[xor_and], a && b);
			EXPECT_EQ(res.run.cycles[0].s[xor_or], a || b);
		}
}

TEST(TwoState, HardRuleAndHalfAtThreshold)
{
	WeightMatrix w(1);
	const double x_t = effective_threshold({}, 15.0, 0.01);
	w.drive[0] = x_t;
	auto net = TwoStateNetwork::from_weights(w, x_t);
	Engine eng = make_engine({});
	EXPECT_EQ(two_state_step(net, eng)[0], 0);   // strict
	net.temperature = 0.1;
	int on = 0;
	const int n = 20000;
	for (int k = 0; k < n; ++k)
		on += two_state_step(net, eng)[0];
	EXPECT_NEAR(on / static_cast<double>(n), 0.5, 3.0 * 0.5 / std::sqrt(n));
}

TEST(NoiseSwitch, PrefixUnchangedAndActivityShifts)
{
	// 64 neurons at 0.9 and 64 at 0.45; low noise, then high noise from 255 ms.
	const std::size_t n = 128;
	WeightMatrix w(n);
	for (std::size_t j = 0; j < n; ++j)
		w.drive[j] = j < 64 ? 0.9 : 0.45;
	NoiseSchedule sw{low, 255.0, high};
	const RngStreamKey key{3, 0, SourceTag::other, 0};
	const auto run = run_network(w, {}, sw, {}, 17, key);
	const auto ref = run_network(w, {}, NoiseSchedule::constant(low), {}, 17, key);
	for (std::size_t k = 0; k < 8; ++k)
		EXPECT_EQ(run.cycles[k].s, ref.cycles[k].s) << "cycle " << k + 1;
	double a_before = 0, b_before = 0, a_after = 0, b_after = 0;
	for (std::size_t k = 0; k < 8; ++k) {
		a_before += group_activity(run, k, 0, 64) / 8.0;
		b_before += group_activity(run, k, 64, 128) / 8.0;
	}
	for (std::size_t k = 8; k < 17; ++k) {
		a_after += group_activity(run, k, 0, 64) / 9.0;
		b_after += group_activity(run, k, 64, 128) / 9.0;
	}
	EXPECT_GT(a_before, 0.95);
	EXPECT_LT(b_before, 0.05);
	EXPECT_LT(a_after, 0.85);
	EXPECT_GT(b_after, 0.1);
	for (const auto &sp : run.raster)
		if (sp.time < 255.0) {
			EXPECT_LE(sp.cycle, 8u);
		}
}

TEST(Marginal, DisconnectedNeuronFollowsFittedLogistic)
{
	NeuronParams p;
	const auto curve = measure_transfer(p, mid, linear_grid(0.0, 1.6, 0.02), 2000, 15.0, 0.01, {31, 0, SourceTag::other, 0});
	const auto fit = fit_logistic(curve);

	const std::vector<double> drives{fit.midpoint - fit.temperature, fit.midpoint, fit.midpoint + fit.temperature};
	WeightMatrix w(drives.size());
	w.drive = drives;
	const std::size_t cycles = 2000;
	NetworkOptions opt;
	opt.record_raster = false;
	const auto run = run_network(w, {}, NoiseSchedule::constant(mid), p, cycles, {32, 0, SourceTag::other, 0}, opt);

	double chi2 = 0.0;
	for (std::size_t j = 0; j < drives.size(); ++j) {
		double on = 0.0;
		for (const auto &c : run.cycles)
			on += c.s[j];
		const double q = logistic((drives[j] - fit.midpoint) / fit.temperature);
		const double e = q * static_cast<double>(cycles);
		chi2 += (on - e) * (on - e) / (e * (1.0 - q));
	}
	// 95% quantile of chi-square with 3 degrees of freedom.
	EXPECT_LT(chi2, 7.815);
}
