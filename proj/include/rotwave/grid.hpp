#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Dense>

#include "rotwave/units.hpp"

namespace rotwave {

/// Uniform internuclear-distance grid shared by every channel. Both end
/// points are grid nodes; the FFT treats the grid as periodic.
struct radial_grid {
	double r_min = 3.5;
	double r_max = 14.0;
	std::size_t size = 128;

	double spacing() const { return (r_max - r_min) / static_cast<double>(size - 1); }
	double point(std::size_t i) const { return r_min + spacing() * static_cast<double>(i); }

	Eigen::VectorXd points() const
	{
		Eigen::VectorXd r(static_cast<Eigen::Index>(size));
		for (std::size_t i = 0; i < size; ++i)
			r[static_cast<Eigen::Index>(i)] = point(i);
		return r;
	}

	/// Angular wavenumbers in FFT order (0, 1, ..., n/2-1, -n/2, ..., -1) * 2pi/(n dR).
	Eigen::VectorXd wavenumbers() const
	{
		const auto n = static_cast<Eigen::Index>(size);
		const double dk = 2.0 * units::pi / (static_cast<double>(size) * spacing());
		Eigen::VectorXd k(n);
		for (Eigen::Index i = 0; i < n; ++i)
			k[i] = dk * static_cast<double>(i < n / 2 ? i : i - n);
		return k;
	}

	bool is_power_of_two() const { return size >= 2 && (size & (size - 1)) == 0; }

	void validate() const
	{
		if (!(r_max > r_min) || size < 4)
			throw std::invalid_argument("radial grid needs r_max > r_min and at least 4 points");
	}

	friend bool operator==(const radial_grid&, const radial_grid&) = default;
};

} // namespace rotwave
