#pragma once

// Fast oracle checks run by `rotwave selftest`.

#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "rotwave/oracles.hpp"
#include "rotwave/rotwave.hpp"

namespace rotwave::selftest {

struct check {
	std::string name;
	std::function<std::string()> run; // empty string on success
};

inline std::string fmt(const char* what, double got, double limit)
{
	std::ostringstream os;
	os << what << " = " << got << " exceeds " << limit;
	return os.str();
}

inline std::vector<check> checks()
{
	std::vector<check> out;

	out.push_back({"wigner3j matches exact oracle (j <= 6)", [] {
		double worst = 0.0;
		for (int j1 = 0; j1 <= 6; ++j1)
			for (int j2 = 0; j2 <= 6; ++j2)
				for (int j3 = std::abs(j1 - j2); j3 <= std::min(6, j1 + j2); ++j3)
					for (int m1 = -j1; m1 <= j1; ++m1)
						for (int m2 = -j2; m2 <= j2; ++m2) {
							const int m3 = -m1 - m2;
							if (std::abs(m3) > j3)
								continue;
							worst = std::max(worst, std::abs(wigner3j(j1, j2, j3, m1, m2, m3)
							                                 - oracles::wigner3j_exact(j1, j2, j3, m1, m2, m3)));
						}
		return worst <= 1e-12 ? std::string() : fmt("max error", worst, 1e-12);
	}});

	out.push_back({"harmonic Fourier-grid spectrum (10 levels)", [] {
		const radial_grid grid;
		const double mu = units::li2_reduced_mass;
		const double omega = units::from_wavenumber(300.0);
		const double r0 = 0.5 * (grid.r_min + grid.r_max);
		Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size));
		for (std::size_t i = 0; i < grid.size; ++i) {
			const double x = grid.point(i) - r0;
			v[static_cast<Eigen::Index>(i)] = 0.5 * mu * omega * omega * x * x;
		}
		const auto levels = solve_bound(v, 0, 10, grid, mu, v.maxCoeff());
		double worst = 0.0;
		for (const auto& l : levels)
			worst = std::max(worst, std::abs(l.energy / oracles::harmonic_level(l.v, omega) - 1.0));
		return worst <= 1e-6 ? std::string() : fmt("max relative error", worst, 1e-6);
	}});

	out.push_back({"two-level Rabi exponential", [] {
		const radial_grid grid{3.5, 14.0, 8};
		channel_layout layout;
		layout.bound_n = {1};
		layout.ion = {{1, 1, 0}};
		layout.bins = {10.0, 190.0, 1};
		const auto model = load_model_li2();
		const propagator prop(model, grid, layout, quantum_defects::li2(), 0.0);
		auto state = prop.make_state();
		state.data().col(0).setConstant(1.0);
		const double g = prop.coupling().cwiseAbs().maxCoeff();
		const double amplitude = 0.3 / g;
		prop.apply_interaction(state, amplitude, 1.0);
		const double total = state.norm();
		const auto expected = oracles::rabi(amplitude * g, 1.0);
		const double err = std::abs(state.channel_norm(0) / total - expected.first)
			+ std::abs(state.channel_norm(1) / total - expected.second);
		return err <= 1e-12 ? std::string() : fmt("population error", err, 1e-12);
	}});

	out.push_back({"isotropic defects suppress N+ != N_E", [] {
		const std::vector<int> bound{1, 3};
		const auto ion = reachable_ion_channels(bound, 0);
		const auto table = make_coupling_matrix(bound, ion, 0, quantum_defects::isotropic());
		const double largest = table.values.cwiseAbs().maxCoeff();
		double worst = 0.0;
		for (Eigen::Index b = 0; b < table.values.rows(); ++b)
			for (Eigen::Index c = 0; c < table.values.cols(); ++c)
				if (table.ion[static_cast<std::size_t>(c)].n_plus != table.bound[static_cast<std::size_t>(b)])
					worst = std::max(worst, std::abs(table.values(b, c)) / largest);
		return worst <= 1e-12 ? std::string() : fmt("relative satellite coupling", worst, 1e-12);
	}});

	out.push_back({"driven propagation conserves norm", [] {
		const auto model = load_model_li2();
		const radial_grid grid;
		level_table levels(model, grid);
		for (int n : {1, 3})
			levels.precompute(curve_label::e_state, n, 1);
		const auto layout = make_layout(2, 0, energy_bins{});
		const propagator prop(model, grid, layout, quantum_defects::li2(), units::from_wavenumber(14625.0));
		auto state = assemble_initial(encode(0, 1), levels, layout, 2, 1);
		const double before = state.norm();
		const pulse_params pulse{1e-3, units::from_wavenumber(14625.0), units::from_ps(0.2)};
		prop.propagate(state, pulse, {});
		const double drift = std::abs(state.norm() - before) / before;
		if (!(state.ion_population() > 0.0))
			return std::string("no ionization happened");
		return drift <= 1e-10 ? std::string() : fmt("relative norm drift", drift, 1e-10);
	}});

	return out;
}

/// Runs every check, prints one line each and returns the number of failures.
inline int run(std::ostream& os)
{
	int failures = 0;
	for (const auto& c : checks()) {
		std::string err;
		try {
			err = c.run();
		} catch (const std::exception& e) {
			err = std::string("exception: ") + e.what();
		}
		os << (err.empty() ? "PASS " : "FAIL ") << c.name;
		if (!err.empty()) {
			os << ": " << err;
			++failures;
		}
		os << '\n';
	}
	return failures;
}

} // namespace rotwave::selftest
