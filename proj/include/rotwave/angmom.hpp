#pragma once

// Angular-momentum algebra for the bound -> ion + electron transition:
// Wigner 3-j symbols, the two-photon preparation coefficients, the
// Hund's case (b) -> (d) frame transformation and the coupling elements
// between E-state rotational channels and ion + p-electron channels.
//
// Only integer angular momenta are supported.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rotwave/units.hpp"

namespace rotwave {

namespace detail {

inline const std::array<long double, 171>& factorial_table()
{
	static const auto table = [] {
		std::array<long double, 171> f{};
		f[0] = 1.0L;
		for (std::size_t i = 1; i < f.size(); ++i)
			f[i] = f[i - 1] * static_cast<long double>(i);
		return f;
	}();
	return table;
}

inline long double factorial(int n)
{
	const auto& f = factorial_table();
	if (n < 0 || static_cast<std::size_t>(n) >= f.size())
		throw std::out_of_range("factorial argument out of table range");
	return f[static_cast<std::size_t>(n)];
}

constexpr int parity_sign(int n) { return (n % 2 == 0) ? 1 : -1; }

constexpr bool triangle(int a, int b, int c)
{
	return c >= std::abs(a - b) && c <= a + b;
}

} // namespace detail

/// Wigner 3-j symbol (j1 j2 j3; m1 m2 m3) for integer arguments, evaluated
/// with the Racah single-sum formula. Selection-rule violations return an
/// exact zero.
inline double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3)
{
	if (j1 < 0 || j2 < 0 || j3 < 0)
		return 0.0;
	if (m1 + m2 + m3 != 0)
		return 0.0;
	if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3)
		return 0.0;
	if (!detail::triangle(j1, j2, j3))
		return 0.0;
	// (j1 j2 j3; 0 0 0) vanishes for odd J
	if (m1 == 0 && m2 == 0 && m3 == 0 && (j1 + j2 + j3) % 2 != 0)
		return 0.0;

	using detail::factorial;
	const long double delta = factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3)
		/ factorial(j1 + j2 + j3 + 1);
	const long double projections = factorial(j1 + m1) * factorial(j1 - m1) * factorial(j2 + m2)
		* factorial(j2 - m2) * factorial(j3 + m3) * factorial(j3 - m3);

	const int k_min = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
	const int k_max = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});

	// Kahan-compensated alternating sum.
	long double sum = 0.0L;
	long double carry = 0.0L;
	for (int k = k_min; k <= k_max; ++k) {
		const long double term = static_cast<long double>(detail::parity_sign(k))
			/ (factorial(k) * factorial(j3 - j2 + k + m1) * factorial(j3 - j1 + k - m2)
			   * factorial(j1 + j2 - j3 - k) * factorial(j1 - k - m1) * factorial(j2 - k + m2));
		const long double y = term - carry;
		const long double t = sum + y;
		carry = (t - sum) - y;
		sum = t;
	}

	const long double value = static_cast<long double>(detail::parity_sign(j1 - j2 - m3))
		* std::sqrt(delta * projections) * sum;
	return static_cast<double>(value);
}

/// Short-range quantum defects of the sigma and pi p-continua.
struct quantum_defects {
	double sigma = 0.001;
	double pi = -0.287;

	static constexpr quantum_defects li2() { return {0.001, -0.287}; }
	static constexpr quantum_defects isotropic(double mu = 0.001) { return {mu, mu}; }

	bool is_isotropic() const { return sigma == pi; }
	double for_projection(int lambda) const { return lambda == 0 ? sigma : pi; }

	friend bool operator==(const quantum_defects&, const quantum_defects&) = default;
};

/// Amplitude of the E-state component (N_E, M) prepared from the source
/// level N_X through the intermediate level N_A by two parallel one-photon
/// steps.
inline double prep_coefficient(int n_x, int n_a, int n_e, int m)
{
	if (std::abs(m) > std::min({n_x, n_a, n_e}))
		return 0.0;
	return std::sqrt(2.0 * n_e + 1.0) * (2.0 * n_a + 1.0) * std::sqrt(2.0 * n_x + 1.0)
		* wigner3j(n_a, 1, n_x, m, 0, -m) * wigner3j(n_a, 1, n_x, 0, 0, 0)
		* wigner3j(n_e, 1, n_a, m, 0, -m) * wigner3j(n_e, 1, n_a, 0, 0, 0);
}

/// Frame-transformation element <N' l' | N Lambda>. With l' = 1 and N' the
/// E-state rotational number this is also the Honl-London factor.
inline double frame_transform(int n_prime, int l_prime, int n, int lambda)
{
	if (lambda < 0)
		throw std::invalid_argument("frame_transform: Lambda must be non-negative");
	const double degeneracy = lambda == 0 ? 1.0 : 2.0;
	return detail::parity_sign(n_prime + lambda + 1) * std::sqrt(degeneracy)
		* std::sqrt(2.0 * n_prime + 1.0) * wigner3j(l_prime, n, n_prime, -lambda, lambda, 0);
}

/// Molecular-frame projection of the ionization dipole onto Lambda for a
/// sigma Rydberg electron ejected into partial wave l. The (-1)^Lambda phase
/// makes the Lambda-sum collapse to the frame-transformation closure when the
/// quantum defects are equal.
inline double dipole_projection(int l, int lambda)
{
	return detail::parity_sign(lambda) * wigner3j(l, 1, 0, -lambda, lambda, 0);
}

/// Source term {N_E | N | N+ l} summed over Lambda = 0, 1 for a Sigma ion
/// core. `dipole` is the Condon-approximation radial dipole d_l.
inline std::complex<double> source_term(int n_e, int n, int n_plus, int l, const quantum_defects& defects,
                                        double dipole = 1.0)
{
	std::complex<double> sum{0.0, 0.0};
	for (int lambda = 0; lambda <= 1; ++lambda) {
		const double geometric = frame_transform(n_plus, l, n, lambda) * dipole_projection(l, lambda)
			* frame_transform(n_e, 1, n, lambda);
		if (geometric == 0.0)
			continue;
		sum += geometric * dipole * std::polar(1.0, units::pi * defects.for_projection(lambda));
	}
	return sum;
}

/// Ion + electron channel: ion rotation N+, electron partial wave l and its
/// lab-frame projection m. The ion projection is M - m.
struct ion_channel {
	int n_plus = 0;
	int l = 1;
	int m = 0;

	friend auto operator<=>(const ion_channel&, const ion_channel&) = default;
};

/// Dipole parity selection for Sigma+ -> Sigma+ + electron(l): N+ + l + N_E odd.
constexpr bool parity_allowed(int n_e, int n_plus, int l)
{
	return (n_e + n_plus + l) % 2 != 0;
}

/// Coupling element M^{N+, l, m}_{N_E, M}.
inline std::complex<double> coupling_element(int n_e, int big_m, const ion_channel& ion,
                                             const quantum_defects& defects, double dipole = 1.0)
{
	const int m_ion = big_m - ion.m;
	if (std::abs(ion.m) > ion.l || std::abs(m_ion) > ion.n_plus || std::abs(big_m) > n_e)
		return {0.0, 0.0};
	if (!parity_allowed(n_e, ion.n_plus, ion.l))
		return {0.0, 0.0};

	const int n_lo = std::max(std::abs(ion.n_plus - ion.l), std::abs(n_e - 1));
	const int n_hi = std::min(ion.n_plus + ion.l, n_e + 1);
	std::complex<double> sum{0.0, 0.0};
	for (int n = n_lo; n <= n_hi; ++n) {
		const double angular = (2.0 * n + 1.0) * wigner3j(ion.n_plus, ion.l, n, m_ion, ion.m, -big_m)
			* wigner3j(n_e, 1, n, big_m, 0, -big_m);
		if (angular == 0.0)
			continue;
		sum += angular * source_term(n_e, n, ion.n_plus, ion.l, defects, dipole);
	}
	return sum;
}

struct coupling_entry {
	int n_e;
	int big_m;
	ion_channel ion;
	std::complex<double> value;
};

/// Full bound x ion coupling table for one projection M.
struct coupling_matrix {
	int big_m = 0;
	std::vector<int> bound;
	std::vector<ion_channel> ion;
	Eigen::MatrixXcd values; // rows: bound channels, columns: ion channels

	coupling_entry at(Eigen::Index row, Eigen::Index col) const
	{
		return {bound[static_cast<std::size_t>(row)], big_m, ion[static_cast<std::size_t>(col)], values(row, col)};
	}
};

inline coupling_matrix make_coupling_matrix(std::span<const int> bound_n, std::span<const ion_channel> ion, int big_m,
                                            const quantum_defects& defects, double dipole = 1.0)
{
	coupling_matrix table;
	table.big_m = big_m;
	table.bound.assign(bound_n.begin(), bound_n.end());
	table.ion.assign(ion.begin(), ion.end());
	table.values.resize(static_cast<Eigen::Index>(bound_n.size()), static_cast<Eigen::Index>(ion.size()));
	for (std::size_t i = 0; i < bound_n.size(); ++i)
		for (std::size_t j = 0; j < ion.size(); ++j)
			table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
				= coupling_element(bound_n[i], big_m, ion[j], defects, dipole);
	return table;
}

/// Every ion channel reachable by one photon from at least one of `bound_n`
/// at projection M: triangle rules, parity and |M - m| <= N+. Sorted by (N+, m).
inline std::vector<ion_channel> reachable_ion_channels(std::span<const int> bound_n, int big_m, int l = 1)
{
	std::vector<ion_channel> out;
	if (bound_n.empty())
		return out;
	const int n_max = *std::max_element(bound_n.begin(), bound_n.end()) + 1 + l;
	for (int n_plus = 0; n_plus <= n_max; ++n_plus) {
		const bool reachable = std::any_of(bound_n.begin(), bound_n.end(), [&](int n_e) {
			if (!parity_allowed(n_e, n_plus, l))
				return false;
			const int lo = std::max(std::abs(n_plus - l), std::abs(n_e - 1));
			const int hi = std::min(n_plus + l, n_e + 1);
			return lo <= hi;
		});
		if (!reachable)
			continue;
		for (int m = -l; m <= l; ++m)
			if (std::abs(big_m - m) <= n_plus)
				out.push_back({n_plus, l, m});
	}
	return out;
}

} // namespace rotwave
