#pragma once

// Reference values computed independently of the production code paths:
// exact-arithmetic 3-j symbols, analytic oscillator spectra, the two-level
// Rabi solution and free Gaussian dispersion. Used by the test suites and
// the command-line self test.

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace rotwave::oracles {

namespace detail {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline const cpp_int& factorial(int n)
{
	static const std::vector<cpp_int> table = [] {
		std::vector<cpp_int> t(128);
		t[0] = 1;
		for (std::size_t i = 1; i < t.size(); ++i)
			t[i] = t[i - 1] * static_cast<unsigned>(i);
		return t;
	}();
	if (n < 0 || static_cast<std::size_t>(n) >= table.size())
		throw std::invalid_argument("factorial argument out of range");
	return table[static_cast<std::size_t>(n)];
}

} // namespace detail

/// Wigner 3-j symbol from the Racah formula in exact rational arithmetic;
/// the final square root is taken in 50-digit binary floating point.
inline double wigner3j_exact(int j1, int j2, int j3, int m1, int m2, int m3)
{
	using detail::cpp_int;
	using detail::cpp_rational;
	using detail::factorial;
	if (m1 + m2 + m3 != 0 || std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3)
		return 0.0;
	if (j3 < std::abs(j1 - j2) || j3 > j1 + j2)
		return 0.0;

	cpp_rational sum = 0;
	for (int k = 0; k <= j1 + j2 + j3; ++k) {
		const int d[6] = {k, j3 - j2 + k + m1, j3 - j1 + k - m2, j1 + j2 - j3 - k, j1 - k - m1, j2 - k + m2};
		bool valid = true;
		for (int x : d)
			valid = valid && x >= 0;
		if (!valid)
			continue;
		cpp_int den = 1;
		for (int x : d)
			den *= factorial(x);
		sum += cpp_rational(k % 2 == 0 ? 1 : -1, den);
	}
	if (sum == 0)
		return 0.0;

	const cpp_rational triangle(factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3),
	                            factorial(j1 + j2 + j3 + 1));
	const cpp_int proj = factorial(j1 + m1) * factorial(j1 - m1) * factorial(j2 + m2) * factorial(j2 - m2)
		* factorial(j3 + m3) * factorial(j3 - m3);
	const cpp_rational square = triangle * proj * sum * sum;

	using big = boost::multiprecision::cpp_bin_float_50;
	const big magnitude = sqrt(big(numerator(square)) / big(denominator(square)));
	const int phase = ((j1 - j2 - m3) % 2 == 0 ? 1 : -1) * (sum > 0 ? 1 : -1);
	return phase * magnitude.convert_to<double>();
}

/// Energy of level v of the harmonic oscillator of angular frequency omega.
inline double harmonic_level(int v, double omega) { return omega * (v + 0.5); }

/// Energy of level v of the Morse well d_e (exp(-2ax) - 2 exp(-ax)) relative
/// to the well bottom: w (v + 1/2) - [w (v + 1/2)]^2 / (4 d_e) with
/// w = a sqrt(2 d_e / mu).
inline double morse_level(int v, double d_e, double a, double reduced_mass)
{
	const double w = a * std::sqrt(2.0 * d_e / reduced_mass);
	const double x = w * (v + 0.5);
	return x - x * x / (4.0 * d_e);
}

/// Populations (initial, other) after exp(-i g sigma_x t) applied to the
/// first state of a resonant two-level system.
struct rabi_populations {
	double first;
	double second;
};

inline rabi_populations rabi(double g, double t)
{
	const double c = std::cos(g * t);
	const double s = std::sin(g * t);
	return {c * c, s * s};
}

/// Standard deviation of |psi|^2 for a free Gaussian packet of initial
/// position spread sigma0 after time t.
inline double free_gaussian_width(double sigma0, double t, double mass)
{
	const double s = t / (2.0 * mass * sigma0 * sigma0);
	return sigma0 * std::sqrt(1.0 + s * s);
}

} // namespace rotwave::oracles
