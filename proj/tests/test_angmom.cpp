#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "rotwave/angmom.hpp"
#include "rotwave/oracles.hpp"

using namespace rotwave;

namespace {

// Calls f(j1, j2, j3, m1, m2, m3) for every admissible integer symbol with j <= jmax.
template <class F>
void for_each_symbol(int jmax, F&& f)
{
	for (int j1 = 0; j1 <= jmax; ++j1)
		for (int j2 = 0; j2 <= jmax; ++j2)
			for (int j3 = std::abs(j1 - j2); j3 <= std::min(jmax, j1 + j2); ++j3)
				for (int m1 = -j1; m1 <= j1; ++m1)
					for (int m2 = -j2; m2 <= j2; ++m2) {
						const int m3 = -m1 - m2;
						if (std::abs(m3) <= j3)
							f(j1, j2, j3, m1, m2, m3);
					}
}

} // namespace

TEST(Wigner3j, KnownValues)
{
	EXPECT_NEAR(wigner3j(1, 1, 2, 0, 0, 0), std::sqrt(2.0 / 15.0), 1e-15);
	EXPECT_NEAR(wigner3j(1, 1, 0, 0, 0, 0), -1.0 / std::sqrt(3.0), 1e-15);
	EXPECT_EQ(wigner3j(1, 1, 3, 0, 0, 0), 0.0);
}

TEST(Wigner3j, SelectionRulesGiveExactZero)
{
	EXPECT_EQ(wigner3j(2, 2, 2, 1, 1, 1), 0.0);    // projections do not sum to zero
	EXPECT_EQ(wigner3j(2, 1, 0, 0, 0, 0), 0.0);    // triangle
	EXPECT_EQ(wigner3j(1, 1, 1, 0, 0, 0), 0.0);    // odd J with zero projections
	EXPECT_EQ(wigner3j(1, 1, 2, 2, -2, 0), 0.0);   // |m| > j
}

TEST(Wigner3j, MatchesExactOracleUpToTen)
{
	double worst = 0.0;
	for_each_symbol(10, [&](int j1, int j2, int j3, int m1, int m2, int m3) {
		worst = std::max(worst, std::abs(wigner3j(j1, j2, j3, m1, m2, m3)
		                                 - oracles::wigner3j_exact(j1, j2, j3, m1, m2, m3)));
	});
	EXPECT_LE(worst, 1e-12);
}

TEST(Wigner3j, PermutationSymmetry)
{
	for_each_symbol(5, [](int j1, int j2, int j3, int m1, int m2, int m3) {
		const double v = wigner3j(j1, j2, j3, m1, m2, m3);
		const double odd = ((j1 + j2 + j3) % 2 == 0) ? 1.0 : -1.0;
		EXPECT_NEAR(wigner3j(j2, j3, j1, m2, m3, m1), v, 1e-14);
		EXPECT_NEAR(wigner3j(j3, j1, j2, m3, m1, m2), v, 1e-14);
		EXPECT_NEAR(wigner3j(j2, j1, j3, m2, m1, m3), odd * v, 1e-14);
		EXPECT_NEAR(wigner3j(j1, j2, j3, -m1, -m2, -m3), odd * v, 1e-14);
	});
}

TEST(Wigner3j, Orthogonality)
{
	double worst = 0.0;
	for (int j1 = 0; j1 <= 6; ++j1)
		for (int j2 = 0; j2 <= 6; ++j2)
			for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; ++j3)
				for (int j3p = std::abs(j1 - j2); j3p <= j1 + j2; ++j3p)
					for (int m3 = -std::min(j3, j3p); m3 <= std::min(j3, j3p); ++m3) {
						double sum = 0.0;
						for (int m1 = -j1; m1 <= j1; ++m1) {
							const int m2 = -m1 - m3;
							if (std::abs(m2) > j2)
								continue;
							sum += (2.0 * j3 + 1.0) * wigner3j(j1, j2, j3, m1, m2, m3)
								* wigner3j(j1, j2, j3p, m1, m2, m3);
						}
						worst = std::max(worst, std::abs(sum - (j3 == j3p ? 1.0 : 0.0)));
					}
	EXPECT_LE(worst, 1e-12);
}

TEST(PrepCoefficient, FourFactorProduct)
{
	const double expected = std::sqrt(7.0) * 5.0 * std::sqrt(3.0)
		* std::pow(oracles::wigner3j_exact(2, 1, 1, 0, 0, 0), 2) * std::pow(oracles::wigner3j_exact(3, 1, 2, 0, 0, 0), 2);
	EXPECT_NEAR(prep_coefficient(1, 2, 3, 0), expected, 1e-14);
	EXPECT_NEAR(prep_coefficient(1, 2, 3, 0), 0.261861468283191, 1e-13);
	EXPECT_NEAR(prep_coefficient(1, 2, 3, 1), 0.213808993529940, 1e-13);
}

TEST(PrepCoefficient, ForbiddenAndSymmetric)
{
	EXPECT_EQ(prep_coefficient(1, 2, 2, 0), 0.0);
	EXPECT_EQ(prep_coefficient(1, 2, 3, 2), 0.0);
	for (int n_e : {1, 3})
		EXPECT_NEAR(prep_coefficient(1, 2, n_e, 1), prep_coefficient(1, 2, n_e, -1), 1e-15);
}

TEST(FrameTransform, KnownValueAndTriangle)
{
	const double expected = -1.0 * oracles::wigner3j_exact(1, 1, 0, 0, 0, 0);
	EXPECT_NEAR(frame_transform(0, 1, 1, 0), expected, 1e-15);
	EXPECT_NEAR(frame_transform(0, 1, 1, 0), 1.0 / std::sqrt(3.0), 1e-15);
	EXPECT_EQ(frame_transform(5, 1, 1, 0), 0.0);
	EXPECT_THROW(frame_transform(1, 1, 1, -1), std::invalid_argument);
}

TEST(FrameTransform, RowsAreOrthonormal)
{
	// For fixed N the parity-adapted Lambda = 0, 1 states expand over N' = N -+ 1.
	for (int n = 1; n <= 8; ++n)
		for (int a = 0; a <= 1; ++a)
			for (int b = 0; b <= 1; ++b) {
				double sum = 0.0;
				for (int np : {n - 1, n + 1})
					sum += frame_transform(np, 1, n, a) * frame_transform(np, 1, n, b);
				EXPECT_NEAR(sum, a == b ? 1.0 : 0.0, 1e-12) << "N=" << n << " Lambda=" << a << "," << b;
			}
}

TEST(FrameTransform, DistinctRotationalLevelsAreOrthogonal)
{
	for (int np = 0; np <= 8; ++np)
		for (int npp = 0; npp <= 8; ++npp) {
			if (np == npp)
				continue;
			double sum = 0.0;
			// Stay inside one parity block: N differs from both N' by one.
			for (int n = 0; n <= 10; ++n) {
				if (std::abs(n - np) != 1 || std::abs(n - npp) != 1)
					continue;
				for (int lambda = 0; lambda <= 1; ++lambda)
					sum += frame_transform(np, 1, n, lambda) * frame_transform(npp, 1, n, lambda);
			}
			EXPECT_NEAR(sum, 0.0, 1e-12) << np << "," << npp;
		}
}

TEST(SourceTerm, OnlyLambdaZeroAndOneContribute)
{
	// A Lambda = 2 projection cannot arise: the dipole projection vanishes.
	EXPECT_EQ(dipole_projection(1, 2), 0.0);
	EXPECT_NE(dipole_projection(1, 0), 0.0);
	EXPECT_NE(dipole_projection(1, 1), 0.0);
}

TEST(SourceTerm, IsotropicDefectsGiveCommonPhase)
{
	const auto iso = quantum_defects::isotropic(0.2);
	for (int n = 0; n <= 4; ++n)
		for (int np = 0; np <= 5; ++np) {
			const auto s = source_term(3, n, np, 1, iso) * std::polar(1.0, -units::pi * 0.2);
			EXPECT_NEAR(s.imag(), 0.0, 1e-14);
		}
}

TEST(CouplingMatrix, SelectionForLowestLevel)
{
	const std::vector<int> bound{1};
	const auto ion = reachable_ion_channels(bound, 0);
	const auto table = make_coupling_matrix(bound, ion, 0, quantum_defects::li2());
	for (std::size_t c = 0; c < ion.size(); ++c) {
		const double mag = std::abs(table.values(0, static_cast<Eigen::Index>(c)));
		if (ion[c].n_plus == 1 || ion[c].n_plus == 3)
			EXPECT_GT(mag, 1e-3) << "N+=" << ion[c].n_plus << " m=" << ion[c].m;
		else
			EXPECT_EQ(mag, 0.0);
	}
	std::set<int> seen;
	for (const auto& c : ion)
		seen.insert(c.n_plus);
	EXPECT_EQ(seen, (std::set<int>{1, 3}));
}

TEST(CouplingMatrix, ProjectionBeyondMomentumIsZero)
{
	// M = 1, m = -1 gives ion projection 2 > N+ = 1.
	EXPECT_EQ(coupling_element(1, 1, {1, 1, -1}, quantum_defects::li2()), std::complex<double>(0.0, 0.0));
}

TEST(CouplingMatrix, IsotropicSuppressesSatellites)
{
	for (int big_m = -1; big_m <= 1; ++big_m) {
		const std::vector<int> bound{1, 3};
		const auto ion = reachable_ion_channels(bound, big_m);
		const auto table = make_coupling_matrix(bound, ion, big_m, quantum_defects::isotropic());
		const double largest = table.values.cwiseAbs().maxCoeff();
		for (Eigen::Index b = 0; b < table.values.rows(); ++b)
			for (Eigen::Index c = 0; c < table.values.cols(); ++c)
				if (table.ion[static_cast<std::size_t>(c)].n_plus != table.bound[static_cast<std::size_t>(b)])
					EXPECT_LE(std::abs(table.values(b, c)), 1e-12 * largest);
	}
}

TEST(CouplingMatrix, AnisotropicFeedsSatellites)
{
	const auto plus2 = coupling_element(1, 0, {3, 1, 0}, quantum_defects::li2());
	const auto main = coupling_element(1, 0, {1, 1, 0}, quantum_defects::li2());
	EXPECT_GT(std::abs(plus2), 1e-2 * std::abs(main));
	const auto minus2 = coupling_element(3, 0, {1, 1, 0}, quantum_defects::li2());
	EXPECT_GT(std::abs(minus2), 1e-2 * std::abs(main));
}

TEST(CouplingMatrix, ReflectionSymmetry)
{
	for (int n_e : {1, 3})
		for (int big_m = -1; big_m <= 1; ++big_m)
			for (const auto& c : reachable_ion_channels(std::vector<int>{n_e}, big_m)) {
				const auto a = coupling_element(n_e, big_m, c, quantum_defects::li2());
				const auto b = coupling_element(n_e, -big_m, {c.n_plus, c.l, -c.m}, quantum_defects::li2());
				EXPECT_NEAR(std::abs(a), std::abs(b), 1e-14);
				if (std::abs(a) > 1e-12)
					EXPECT_NEAR(std::abs(a - b) * std::abs(a + b), 0.0, 1e-14);
			}
}

TEST(CouplingMatrix, ParityRule)
{
	EXPECT_TRUE(parity_allowed(1, 1, 1));
	EXPECT_FALSE(parity_allowed(1, 2, 1));
	EXPECT_EQ(coupling_element(1, 0, {2, 1, 0}, quantum_defects::li2()), std::complex<double>(0.0, 0.0));
}
