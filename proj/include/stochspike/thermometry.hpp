#pragma once

/*
 * Effective temperature of a noisy integrate-and-fire neuron.
 *
 * Analytic route: in the diffusion limit the membrane is an Ornstein-Uhlenbeck
 * process with mean mu and amplitude sigma. Spiking within a window of
 * effective length T'_W = T_W - gamma*tau_m is modelled as an exponential
 * first-passage event with mean T_mu (the mean first-passage time from mu to
 * threshold), so P_spk = 1 - exp(-T'_W / T_mu). Matching the slope of P_spk at
 * P_spk = 1/2 to the slope 1/(4T) of a logistic gives
 *
 *    T = T'_W sigma / (2 ln(2)^2 tau_m f((u_t - mu)/sigma)),
 *    f(x) = sqrt(pi) exp(x^2) (1 + erf x).
 *
 * Empirical route: measure the windowed spike probability over a grid of
 * drives and fit a logistic.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "neuron.hpp"
#include "poisson.hpp"
#include "rng.hpp"

namespace stochspike {

class ConfigError : public std::invalid_argument {
public:
	using std::invalid_argument::invalid_argument;
};

class FitError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

struct OUMoments {
	double mu = 0.0;
	double sigma = 0.0;
};

// mu = R I_o + tau_m (lambda_e w_e - lambda_i w_i),
// sigma^2 = tau_m (lambda_e w_e^2 + lambda_i w_i^2), with rates in 1/ms.
inline OUMoments ou_moments(const NeuronParams &p, const NoiseConfig &cfg, double i_o)
{
	const double le = per_ms(cfg.lambda_e);
	const double li = per_ms(cfg.lambda_i);
	return {p.resistance * i_o + p.tau_m * (le * cfg.w_e - li * cfg.w_i),
	        std::sqrt(p.tau_m * (le * cfg.w_e * cfg.w_e + li * cfg.w_i * cfg.w_i))};
}

namespace detail {

// sqrt(pi) * erfcx(y) for y >= 5 by backward evaluation of the continued
// fraction 1/(y + (1/2)/(y + 1/(y + (3/2)/(y + ...)))).
inline double sqrt_pi_erfcx_large(double y)
{
	double tail = y;
	for (int k = 80; k >= 1; --k)
		tail = y + 0.5 * k / tail;
	return 1.0 / tail;
}

} // namespace detail

// f(x) = sqrt(pi) e^{x^2} (1 + erf x). Uses the complementary form for
// negative x so the product stays accurate where erf(x) -> -1.
inline double f_kernel(double x)
{
	if (!std::isfinite(x))
		throw std::domain_error("f_kernel: argument must be finite");
	constexpr double sqrt_pi = 1.7724538509055160273;
	if (x >= 0.0) {
		if (x * x > 709.0)
			throw std::overflow_error("f_kernel: e^{x^2} overflows for x = " + std::to_string(x));
		return sqrt_pi * std::exp(x * x) * (1.0 + std::erf(x));
	}
	const double y = -x;
	if (y < 5.0)
		return sqrt_pi * std::exp(y * y) * std::erfc(y);
	return detail::sqrt_pi_erfcx_large(y);
}

// Integral of f over [0, y]. Above y = 4 the integrand is rescaled by
// e^{-y^2} so the quadrature works on an O(1) function; the factor is
// reapplied at the end (and may overflow to +inf for y above ~26).
inline double f_kernel_integral(double y)
{
	using boost::math::quadrature::gauss_kronrod;
	if (y <= 0.0)
		return 0.0;
	constexpr double tol = 1e-11;
	if (y <= 4.0)
		return gauss_kronrod<double, 21>::integrate(f_kernel, 0.0, y, 15, tol);
	constexpr double sqrt_pi = 1.7724538509055160273;
	const double y2 = y * y;
	auto scaled = [&](double x) { return sqrt_pi * std::exp(x * x - y2) * (1.0 + std::erf(x)); };
	const double j = gauss_kronrod<double, 21>::integrate(scaled, 0.0, y, 20, tol);
	return j * std::exp(y2);
}

// Mean first-passage time of the OU process from mu to u_t:
// T_mu = tau_m * integral_0^{(u_t - mu)/sigma} f(x) dx. Zero when mu >= u_t.
inline double mfpt(const NeuronParams &p, const OUMoments &mom)
{
	if (mom.mu >= p.u_thresh)
		return 0.0;
	if (!(mom.sigma > 0.0))
		throw std::domain_error("mfpt: deterministic regime (sigma = 0), MFPT undefined by this formula");
	return p.tau_m * f_kernel_integral((p.u_thresh - mom.mu) / mom.sigma);
}

inline double p_spike_analytic(double t_mu, double t_w_prime)
{
	if (t_mu <= 0.0)
		return 1.0;
	return -std::expm1(-t_w_prime / t_mu);
}

// T'_W = T_W - gamma tau_m: the part of the window after the membrane has
// settled.
inline double effective_window(const NeuronParams &p, double gamma, double T_W)
{
	const double tw = T_W - gamma * p.tau_m;
	if (!(tw > 0.0))
		throw ConfigError("window shorter than transient exclusion: T_W - gamma*tau_m = " + std::to_string(tw));
	return tw;
}

// Analytic spike probability for drive i_o.
inline double p_spike_at(const NeuronParams &p, const NoiseConfig &cfg, double i_o, double gamma, double T_W)
{
	const double tw = effective_window(p, gamma, T_W);
	const auto mom = ou_moments(p, cfg, i_o);
	return p_spike_analytic(mfpt(p, mom), tw);
}

struct ThermoEstimate {
	double t_analytic = 0.0;
	double slope = 0.0;          // dP_spk/dI at P_spk = 1/2, equal to 1/(4T)
	double midpoint = 0.0;       // drive with P_spk = 1/2
	double t_mu = 0.0;
	double t_w_prime = 0.0;
	double gamma = 3.0;
	OUMoments moments;           // evaluated at the midpoint
	std::optional<double> t_fitted;
};

// Drive at which the analytic spike probability equals `target`, by
// bisection (P_spk is increasing in the drive).
inline double drive_for_probability(const NeuronParams &p, const NoiseConfig &cfg, double target, double gamma,
                                    double T_W, double tol = 1e-6)
{
	if (!(target > 0.0 && target < 1.0))
		throw std::invalid_argument("drive_for_probability: target must lie in (0, 1)");
	const auto base = ou_moments(p, cfg, 0.0);
	if (!(base.sigma > 0.0))
		throw std::domain_error("temperature: noise-free configuration has zero temperature");
	// P = 1 at mu = u_t; far below threshold P -> 0.
	double hi = (p.u_thresh - base.mu) / p.resistance;
	double lo = hi - 40.0 * base.sigma / p.resistance;
	auto g = [&](double i) { return p_spike_at(p, cfg, i, gamma, T_W) - target; };
	while (g(lo) > 0.0)
		lo -= 40.0 * base.sigma / p.resistance;
	while (hi - lo > tol) {
		const double mid = 0.5 * (lo + hi);
		(g(mid) > 0.0 ? hi : lo) = mid;
	}
	return 0.5 * (lo + hi);
}

inline double half_probability_drive(const NeuronParams &p, const NoiseConfig &cfg, double gamma, double T_W,
                                     double tol = 1e-6)
{
	return drive_for_probability(p, cfg, 0.5, gamma, T_W, tol);
}

inline ThermoEstimate temperature_analytic(const NeuronParams &p, const NoiseConfig &cfg, double gamma, double T_W)
{
	ThermoEstimate est;
	est.gamma = gamma;
	est.t_w_prime = effective_window(p, gamma, T_W);
	est.midpoint = half_probability_drive(p, cfg, gamma, T_W);
	est.moments = ou_moments(p, cfg, est.midpoint);
	est.t_mu = mfpt(p, est.moments);
	const double ln2 = std::numbers::ln2;
	const double sigma = est.moments.sigma;
	const double fx = f_kernel((p.u_thresh - est.moments.mu) / sigma);
	// dP/dmu, and dmu/dI = R.
	est.slope = 0.5 * ln2 * ln2 * p.tau_m / (est.t_w_prime * sigma) * fx * p.resistance;
	est.t_analytic = est.t_w_prime * sigma / (2.0 * ln2 * ln2 * p.tau_m * fx);
	return est;
}

struct TransferPoint {
	double i_o;
	double p_spike;
	std::size_t n_trials;
};

struct TransferCurve {
	std::vector<TransferPoint> points;
};

// Fires-or-not for one window with fresh Poisson input. The window is the
// open interval (0, T_W) on the dt grid.
class WindowTrial {
public:
	WindowTrial(const NeuronParams &p, const NoiseConfig &cfg, double T_W, double dt)
	    : integ_(p, dt), cfg_(cfg), n_(window_steps(T_W, dt)), T_W_(T_W)
	{
		cfg.validate();
	}

	WindowResult run(double i_o, const RngStreamKey &key, bool record_trace = false)
	{
		impulses_.clear();
		if (cfg_.lambda_e > 0.0 && cfg_.w_e > 0.0) {
			PoissonSource exc(key.with_tag(SourceTag::excitatory), cfg_.lambda_e);
			exc.drain_until(T_W_, [&](double t) { impulses_.push_back({t, cfg_.w_e}); });
		}
		const auto n_exc = impulses_.size();
		if (cfg_.lambda_i > 0.0 && cfg_.w_i > 0.0) {
			PoissonSource inh(key.with_tag(SourceTag::inhibitory), cfg_.lambda_i);
			inh.drain_until(T_W_, [&](double t) { impulses_.push_back({t, -cfg_.w_i}); });
		}
		std::inplace_merge(impulses_.begin(), impulses_.begin() + static_cast<std::ptrdiff_t>(n_exc), impulses_.end(),
		                   [](const Impulse &a, const Impulse &b) { return a.time < b.time; });
		return integrate_window(integ_, 0.0, n_, WindowInput{i_o, {}, impulses_}, record_trace);
	}

private:
	Integrator integ_;
	NoiseConfig cfg_;
	std::size_t n_;
	double T_W_;
	std::vector<Impulse> impulses_;
};

// Trial t at grid point g uses stream key base.with_neuron(g).with_trial(t).
inline TransferCurve measure_transfer(const NeuronParams &p, const NoiseConfig &cfg, const std::vector<double> &grid,
                                      std::size_t n_trials, double T_W, double dt, const RngStreamKey &base)
{
	if (n_trials < 1)
		throw std::invalid_argument("measure_transfer: n_trials must be >= 1");
	WindowTrial trial(p, cfg, T_W, dt);
	TransferCurve curve;
	curve.points.reserve(grid.size());
	for (std::size_t g = 0; g < grid.size(); ++g) {
		std::size_t fired = 0;
		for (std::size_t t = 0; t < n_trials; ++t)
			fired += trial.run(grid[g], base.with_neuron(g).with_trial(t)).on ? 1 : 0;
		curve.points.push_back({grid[g], static_cast<double>(fired) / static_cast<double>(n_trials), n_trials});
	}
	return curve;
}

struct LogisticFit {
	double midpoint = 0.0;     // drive at P = 1/2
	double temperature = 0.0;
	double residual = 0.0;     // sum of squared probability residuals
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Least-squares fit of P(I) = 1 / (1 + exp(-R (I - I_mid) / T)) by
// Levenberg-Marquardt over (I_mid, log T).
inline LogisticFit fit_logistic(const TransferCurve &curve, double resistance = 1.0)
{
	const auto &pts = curve.points;
	const bool any_low = std::any_of(pts.begin(), pts.end(), [](const auto &q) { return q.p_spike < 0.25; });
	const bool any_high = std::any_of(pts.begin(), pts.end(), [](const auto &q) { return q.p_spike > 0.75; });
	if (!any_low || !any_high)
		throw FitError("no transition in grid");
	if (pts.size() < 4)
		throw FitError("logistic fit needs at least 4 points");

	std::vector<TransferPoint> sorted(pts);
	std::sort(sorted.begin(), sorted.end(), [](const auto &a, const auto &b) { return a.i_o < b.i_o; });
	const double lo_i = sorted.front().i_o;
	const double hi_i = sorted.back().i_o;

	// Initial midpoint from the first crossing of 1/2; width from the spread
	// of points strictly inside (0, 1).
	double c = 0.5 * (lo_i + hi_i);
	for (std::size_t k = 1; k < sorted.size(); ++k) {
		const auto &a = sorted[k - 1];
		const auto &b = sorted[k];
		if (a.p_spike <= 0.5 && b.p_spike >= 0.5) {
			c = b.p_spike == a.p_spike ? 0.5 * (a.i_o + b.i_o)
			                           : a.i_o + (0.5 - a.p_spike) * (b.i_o - a.i_o) / (b.p_spike - a.p_spike);
			break;
		}
	}
	double i10 = lo_i, i90 = hi_i;
	for (const auto &q : sorted)
		if (q.p_spike <= 0.1)
			i10 = q.i_o;
	for (auto it = sorted.rbegin(); it != sorted.rend(); ++it)
		if (it->p_spike >= 0.9)
			i90 = it->i_o;
	double width = std::max(i90 - i10, 1e-3 * (hi_i - lo_i + 1e-12));
	double theta = std::log(std::max(resistance * width / (2.0 * std::log(9.0)), 1e-9));

	auto sse = [&](double cc, double th) {
		const double T = std::exp(th);
		double s = 0.0;
		for (const auto &q : pts) {
			const double r = logistic(resistance * (q.i_o - cc) / T) - q.p_spike;
			s += r * r;
		}
		return s;
	};

	double cur = sse(c, theta);
	double lambda = 1e-3;
	for (int iter = 0; iter < 500; ++iter) {
		const double T = std::exp(theta);
		double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
		for (const auto &q : pts) {
			const double z = resistance * (q.i_o - c) / T;
			const double P = logistic(z);
			const double d = P * (1.0 - P);
			const double jc = -d * resistance / T;
			const double jt = -d * z;
			const double r = P - q.p_spike;
			jtj00 += jc * jc;
			jtj01 += jc * jt;
			jtj11 += jt * jt;
			g0 += jc * r;
			g1 += jt * r;
		}
		bool improved = false;
		for (int tries = 0; tries < 30 && !improved; ++tries) {
			const double a00 = jtj00 * (1.0 + lambda) + 1e-300;
			const double a11 = jtj11 * (1.0 + lambda) + 1e-300;
			const double det = a00 * a11 - jtj01 * jtj01;
			if (!(std::abs(det) > 0.0)) {
				lambda *= 10.0;
				continue;
			}
			const double dc = -(a11 * g0 - jtj01 * g1) / det;
			const double dt = -(a00 * g1 - jtj01 * g0) / det;
			const double next = sse(c + dc, theta + dt);
			if (next < cur) {
				const double rel = (cur - next) / std::max(cur, 1e-300);
				c += dc;
				theta += dt;
				cur = next;
				lambda = std::max(lambda / 10.0, 1e-12);
				improved = true;
				if (rel < 1e-15 || (std::abs(dc) < 1e-13 * (1.0 + std::abs(c)) && std::abs(dt) < 1e-13))
					return {c, std::exp(theta), cur};
			} else {
				lambda *= 10.0;
			}
		}
		if (!improved)
			break;
	}
	return {c, std::exp(theta), cur};
}

namespace detail {

// Standard normal variate by the polar method on the portable uniform source.
inline double standard_normal(Engine &eng, std::optional<double> &spare)
{
	if (spare) {
		const double v = *spare;
		spare.reset();
		return v;
	}
	double a, b, s;
	do {
		a = 2.0 * uniform01(eng) - 1.0;
		b = 2.0 * uniform01(eng) - 1.0;
		s = a * a + b * b;
	} while (s >= 1.0 || s == 0.0);
	const double m = std::sqrt(-2.0 * std::log(s) / s);
	spare = b * m;
	return a * m;
}

} // namespace detail

struct FirstPassageSample {
	std::vector<double> times;   // first-passage times of paths that crossed
	std::size_t censored = 0;    // paths that had not crossed by t_max
	double mean() const
	{
		return times.empty() ? 0.0 : std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
	}
};

// Monte-Carlo first-passage times of the OU process
//    tau_m du = (mu - u) dt + sigma sqrt(tau_m) dW
// started at u = mu, using the exact OU transition over each step and a
// Brownian-bridge test for crossings between grid points.
inline FirstPassageSample ou_first_passage(const NeuronParams &p, const OUMoments &mom, std::size_t n_paths, double dt,
                                           double t_max, const RngStreamKey &key)
{
	if (!(mom.sigma > 0.0))
		throw std::domain_error("ou_first_passage: sigma must be positive");
	const double decay = std::exp(-dt / p.tau_m);
	const double sd = mom.sigma * std::sqrt(0.5 * (1.0 - decay * decay));
	const double diff2 = mom.sigma * mom.sigma / p.tau_m;   // local diffusion coefficient
	const auto max_steps = static_cast<std::size_t>(std::ceil(t_max / dt));
	FirstPassageSample out;
	out.times.reserve(n_paths);
	for (std::size_t k = 0; k < n_paths; ++k) {
		Engine eng = make_engine(key.with_trial(k));
		std::optional<double> spare;
		double u = mom.mu;
		bool crossed = false;
		for (std::size_t n = 1; n <= max_steps; ++n) {
			const double next = mom.mu + (u - mom.mu) * decay + sd * detail::standard_normal(eng, spare);
			if (next > p.u_thresh) {
				out.times.push_back(static_cast<double>(n) * dt);
				crossed = true;
				break;
			}
			const double bridge = std::exp(-2.0 * (p.u_thresh - u) * (p.u_thresh - next) / (diff2 * dt));
			if (uniform01(eng) < bridge) {
				out.times.push_back((static_cast<double>(n) - 0.5) * dt);
				crossed = true;
				break;
			}
			u = next;
		}
		if (!crossed)
			++out.censored;
	}
	return out;
}

} // namespace stochspike
