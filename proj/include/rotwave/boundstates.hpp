#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rotwave/grid.hpp"
#include "rotwave/potentials.hpp"
#include "rotwave/units.hpp"

namespace rotwave {

/// Rovibrational eigenstate chi_{v,N}(R) on the shared grid, normalized so
/// that sum |chi_i|^2 dR = 1.
struct rovib_level {
	int v = 0;
	int n = 0;
	double energy = 0.0; // hartree
	Eigen::VectorXd wavefunction;
	radial_grid grid;
};

/// Kinetic-energy matrix of the periodic Fourier grid: exactly the operator
/// applied by the FFT kinetic propagator.
inline Eigen::MatrixXd fourier_grid_kinetic(const radial_grid& grid, double reduced_mass)
{
	const auto n = static_cast<Eigen::Index>(grid.size);
	const Eigen::VectorXd k = grid.wavenumbers();
	const double dr = grid.spacing();
	Eigen::VectorXd row(n);
	for (Eigen::Index d = 0; d < n; ++d) {
		double s = 0.0;
		for (Eigen::Index j = 0; j < n; ++j)
			s += std::cos(k[j] * static_cast<double>(d) * dr) * k[j] * k[j];
		row[d] = s / (2.0 * reduced_mass * static_cast<double>(n));
	}
	Eigen::MatrixXd t(n, n);
	for (Eigen::Index i = 0; i < n; ++i)
		for (Eigen::Index j = 0; j < n; ++j)
			t(i, j) = row[std::abs(i - j)];
	return t;
}

namespace detail {

inline void fix_sign(Eigen::VectorXd& chi)
{
	const double cutoff = 1e-2 * chi.cwiseAbs().maxCoeff();
	for (Eigen::Index i = 0; i < chi.size(); ++i) {
		if (std::abs(chi[i]) > cutoff) {
			if (chi[i] < 0.0)
				chi = -chi;
			return;
		}
	}
}

} // namespace detail

/// Number of sign changes of chi, ignoring the numerically-zero tails.
inline int count_nodes(const Eigen::VectorXd& chi, double relative_floor = 1e-6)
{
	const double floor = relative_floor * chi.cwiseAbs().maxCoeff();
	int nodes = 0;
	double last = 0.0;
	for (Eigen::Index i = 0; i < chi.size(); ++i) {
		if (std::abs(chi[i]) < floor)
			continue;
		if (last != 0.0 && (chi[i] > 0.0) != (last > 0.0))
			++nodes;
		last = chi[i];
	}
	return nodes;
}

/// Lowest eigenpairs of -1/(2mu) d^2/dR^2 + potential on the Fourier grid.
/// `bound_limit` caps the energies counted as bound.
inline std::vector<rovib_level> solve_bound(const Eigen::VectorXd& potential, int n, int n_levels,
                                            const radial_grid& grid, double reduced_mass, double bound_limit)
{
	std::vector<rovib_level> out;
	if (n_levels <= 0)
		return out;
	if (potential.size() != static_cast<Eigen::Index>(grid.size))
		throw std::invalid_argument("solve_bound: potential length does not match the grid");

	Eigen::MatrixXd h = fourier_grid_kinetic(grid, reduced_mass);
	h.diagonal() += potential;
	const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
	if (solver.info() != Eigen::Success)
		throw std::runtime_error("solve_bound: eigensolver failed");

	const Eigen::VectorXd& energies = solver.eigenvalues();
	int bound = 0;
	while (bound < energies.size() && energies[bound] < bound_limit)
		++bound;
	if (n_levels > bound) {
		std::ostringstream msg;
		msg << "solve_bound: requested " << n_levels << " levels for N = " << n << " but the grid supports only "
		    << bound << " bound states";
		throw std::runtime_error(msg.str());
	}

	const double norm = 1.0 / std::sqrt(grid.spacing());
	out.reserve(static_cast<std::size_t>(n_levels));
	for (int v = 0; v < n_levels; ++v) {
		Eigen::VectorXd chi = solver.eigenvectors().col(v) * norm;
		detail::fix_sign(chi);
		out.push_back({v, n, energies[v], std::move(chi), grid});
	}
	return out;
}

inline std::vector<rovib_level> solve_bound(const potential_curve& curve, int n, int n_levels, const radial_grid& grid,
                                            double reduced_mass)
{
	return solve_bound(evaluate(curve, grid, n, 0.0, reduced_mass), n, n_levels, grid, reduced_mass,
	                   curve.dissociation_limit());
}

/// Real overlap sum chi_a chi_b dR.
inline double franck_condon(const rovib_level& a, const rovib_level& b)
{
	if (!(a.grid == b.grid) || a.wavefunction.size() != b.wavefunction.size())
		throw std::invalid_argument("franck_condon: wavefunctions live on different grids");
	return a.wavefunction.dot(b.wavefunction) * a.grid.spacing();
}

/// <v| 1/(2 mu R^2) |v>, the effective rotational constant of a level.
inline double rotational_constant(const rovib_level& level, double reduced_mass)
{
	const Eigen::VectorXd r = level.grid.points();
	return (level.wavefunction.array().square() / (2.0 * reduced_mass * r.array().square())).sum()
		* level.grid.spacing();
}

/// Photoelectron energy E(v_E, N_E) + omega - E(v+, N+) in cm^-1, or nullopt
/// when the channel is closed (energy not positive).
inline std::optional<double> predict_peak(const rovib_level& e_level, const rovib_level& ion_level, double omega)
{
	const double eps = e_level.energy + omega - ion_level.energy;
	if (!(eps > 0.0))
		return std::nullopt;
	return units::to_wavenumber(eps);
}

/// Precomputed rovibrational levels of both curves, keyed by (curve, N).
class level_table {
public:
	level_table(const molecular_model& model, const radial_grid& grid) : model_(&model), grid_(grid) {}

	/// Solves (and caches) the lowest `n_levels` levels for rotation N.
	void precompute(curve_label which, int n, int n_levels)
	{
		auto& slot = table_[{which, n}];
		if (static_cast<int>(slot.size()) >= n_levels)
			return;
		slot = solve_bound(curve(which), n, n_levels, grid_, model_->reduced_mass);
	}

	const rovib_level& level(curve_label which, int v, int n) const
	{
		const auto it = table_.find({which, n});
		if (it == table_.end() || v >= static_cast<int>(it->second.size())) {
			std::ostringstream msg;
			msg << "level_table: level v = " << v << ", N = " << n << " of " << to_string(which)
			    << " was not precomputed";
			throw std::out_of_range(msg.str());
		}
		return it->second[static_cast<std::size_t>(v)];
	}

	const radial_grid& grid() const { return grid_; }
	const molecular_model& model() const { return *model_; }

private:
	const potential_curve& curve(curve_label which) const
	{
		return which == curve_label::ion ? model_->ion : model_->e_state;
	}

	const molecular_model* model_;
	radial_grid grid_;
	std::map<std::pair<curve_label, int>, std::vector<rovib_level>> table_;
};

} // namespace rotwave
