#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include <stochspike/poisson.hpp>

using namespace stochspike;

namespace {

RngStreamKey key(std::uint64_t seed, std::uint64_t trial = 0)
{
	return {seed, 0, SourceTag::excitatory, trial};
}

struct Moments {
	double mean;
	double var;
};

Moments moments(const std::vector<double> &x)
{
	const double n = static_cast<double>(x.size());
	const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
	double v = 0.0;
	for (double a : x)
		v += (a - m) * (a - m);
	return {m, v / (n - 1.0)};
}

} // namespace

TEST(Poisson, ZeroRateIsEmpty) { EXPECT_TRUE(generate_poisson(0.0, 1000.0, key(1)).events.empty()); }

TEST(Poisson, SameKeySameStream)
{
	const auto a = generate_poisson(5000.0, 100.0, key(7));
	const auto b = generate_poisson(5000.0, 100.0, key(7));
	EXPECT_EQ(a.events, b.events);
	EXPECT_FALSE(a.events.empty());
}

TEST(Poisson, DistinctKeysDiffer)
{
	const RngStreamKey base{3, 0, SourceTag::excitatory, 0};
	const auto ref = generate_poisson(5000.0, 50.0, base).events;
	EXPECT_NE(ref, generate_poisson(5000.0, 50.0, base.with_neuron(1)).events);
	EXPECT_NE(ref, generate_poisson(5000.0, 50.0, base.with_tag(SourceTag::inhibitory)).events);
	EXPECT_NE(ref, generate_poisson(5000.0, 50.0, base.with_trial(1)).events);
	EXPECT_NE(ref, generate_poisson(5000.0, 50.0, RngStreamKey{4, 0, SourceTag::excitatory, 0}).events);
}

TEST(Poisson, EventsStrictlyIncreasingInsideHorizon)
{
	const auto s = generate_poisson(20000.0, 200.0, key(11));
	ASSERT_FALSE(s.events.empty());
	EXPECT_GE(s.events.front(), 0.0);
	EXPECT_LT(s.events.back(), 200.0);
	for (std::size_t k = 1; k < s.events.size(); ++k)
		EXPECT_LT(s.events[k - 1], s.events[k]);
}

TEST(Poisson, CountStatisticsOverSeeds)
{
	// 5000 Hz over 1 s: counts are Poisson(5000).
	const int n_seeds = 1000;
	std::vector<double> counts;
	int outside = 0;
	for (int s = 0; s < n_seeds; ++s) {
		const auto c = static_cast<double>(generate_poisson(5000.0, 1000.0, key(100, s)).events.size());
		counts.push_back(c);
		if (std::abs(c - 5000.0) > 3.0 * std::sqrt(5000.0))
			++outside;
	}
	const auto m = moments(counts);
	const double se_mean = std::sqrt(5000.0 / n_seeds);
	EXPECT_NEAR(m.mean, 5000.0, 3.0 * se_mean);
	// Variance of the sample variance for Poisson(l): ~ (2 l^2 + l)/(n-1).
	const double se_var = std::sqrt((2.0 * 5000.0 * 5000.0 + 5000.0) / (n_seeds - 1));
	EXPECT_NEAR(m.var, 5000.0, 3.0 * se_var);
	// P(|Z| > 3) = 0.27%; allow the binomial spread of that over 1000 seeds.
	EXPECT_LE(outside, 10);
}

TEST(Poisson, SplitHorizonMatchesFullHorizon)
{
	const int n = 1000;
	std::vector<double> full, split;
	for (int s = 0; s < n; ++s) {
		full.push_back(static_cast<double>(generate_poisson(3000.0, 100.0, key(200, s)).events.size()));
		const auto a = generate_poisson(3000.0, 50.0, key(300, s)).events.size();
		const auto b = generate_poisson(3000.0, 50.0, key(400, s)).events.size();
		split.push_back(static_cast<double>(a + b));
	}
	const auto mf = moments(full);
	const auto ms = moments(split);
	const double se = std::sqrt(mf.var / n + ms.var / n);
	EXPECT_NEAR(mf.mean, ms.mean, 3.0 * se);
	EXPECT_NEAR(mf.var / ms.var, 1.0, 0.2);
}

TEST(Poisson, GapsAreExponential)
{
	const auto s = generate_poisson(1000.0, 20000.0, key(5));
	std::vector<double> gaps;
	for (std::size_t k = 1; k < s.events.size(); ++k)
		gaps.push_back(s.events[k] - s.events[k - 1]);
	const auto m = moments(gaps);
	EXPECT_NEAR(m.mean, 1.0, 3.0 / std::sqrt(static_cast<double>(gaps.size())));
	EXPECT_NEAR(std::sqrt(m.var), 1.0, 0.03);
	// Fraction of gaps above the median ln 2 of Exp(1).
	const auto above = std::count_if(gaps.begin(), gaps.end(), [](double g) { return g > std::log(2.0); });
	EXPECT_NEAR(static_cast<double>(above) / static_cast<double>(gaps.size()), 0.5, 0.02);
}

TEST(Poisson, RateChangeMidStream)
{
	PoissonSource src(key(9), 1000.0);
	std::size_t before = src.drain_until(5000.0, [](double) {});
	src.set_rate(0.0, 5000.0);
	std::size_t after = src.drain_until(1e9, [](double) {});
	EXPECT_NEAR(static_cast<double>(before), 5000.0, 4.0 * std::sqrt(5000.0));
	EXPECT_EQ(after, 0u);
}

TEST(ComposeInput, EmptyStreams)
{
	const PoissonStream e{{}, key(1), 0.0}, i{{}, key(2), 0.0};
	const auto c = compose_input(0.7, e, i, NoiseConfig{});
	EXPECT_EQ(c.i_const, 0.7);
	EXPECT_TRUE(c.impulses.empty());
}

TEST(ComposeInput, SignsAndTieOrder)
{
	const NoiseConfig cfg{1.0, 1.0, 0.1, 0.2};
	const PoissonStream e{{1.0, 3.0}, key(1), 1.0}, i{{3.0, 4.0}, key(2), 1.0};
	const auto c = compose_input(0.5, e, i, cfg);
	ASSERT_EQ(c.impulses.size(), 4u);
	EXPECT_EQ(c.impulses[0].time, 1.0);
	EXPECT_EQ(c.impulses[0].jump, 0.1);
	EXPECT_EQ(c.impulses[1].time, 3.0);
	EXPECT_EQ(c.impulses[1].jump, 0.1);   // excitatory first on ties
	EXPECT_EQ(c.impulses[2].time, 3.0);
	EXPECT_EQ(c.impulses[2].jump, -0.2);
	EXPECT_EQ(c.impulses[3].jump, -0.2);
}

TEST(ComposeInput, SingleExcitatoryEvent)
{
	const PoissonStream e{{3.0}, key(1), 1.0}, i{{}, key(2), 0.0};
	const auto c = compose_input(0.0, e, i, NoiseConfig{1.0, 0.0, 0.1, 0.1});
	ASSERT_EQ(c.impulses.size(), 1u);
	EXPECT_EQ(c.impulses[0].time, 3.0);
	EXPECT_EQ(c.impulses[0].jump, 0.1);
}

TEST(ComposeInput, LowRegimeIsAllExcitatory)
{
	const NoiseConfig low{920.0, 0.0, 0.1, 0.1};
	const auto e = generate_poisson(low.lambda_e, 100.0, key(1));
	const auto i = generate_poisson(low.lambda_i, 100.0, RngStreamKey{1, 0, SourceTag::inhibitory, 0});
	const auto c = compose_input(0.5, e, i, low);
	EXPECT_EQ(c.impulses.size(), e.events.size());
	for (const auto &imp : c.impulses)
		EXPECT_GT(imp.jump, 0.0);
}

TEST(ComposeInput, MergedListSorted)
{
	const NoiseConfig mid{5000.0, 6150.0, 0.1, 0.1};
	const auto e = generate_poisson(mid.lambda_e, 100.0, key(2));
	const auto i = generate_poisson(mid.lambda_i, 100.0, RngStreamKey{2, 0, SourceTag::inhibitory, 0});
	const auto c = compose_input(0.0, e, i, mid);
	EXPECT_EQ(c.impulses.size(), e.events.size() + i.events.size());
	for (std::size_t k = 1; k < c.impulses.size(); ++k)
		EXPECT_LE(c.impulses[k - 1].time, c.impulses[k].time);
}

TEST(NoiseConfig, Validation)
{
	EXPECT_THROW((NoiseConfig{-1.0, 0.0, 0.1, 0.1}.validate()), std::invalid_argument);
	EXPECT_THROW((NoiseConfig{1.0, 0.0, -0.1, 0.1}.validate()), std::invalid_argument);
	EXPECT_TRUE(NoiseConfig{}.silent());
	EXPECT_FALSE((NoiseConfig{920.0, 0.0, 0.1, 0.1}.silent()));
}
