#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include "rotwave/grid.hpp"
#include "rotwave/units.hpp"

namespace rotwave {

enum class curve_label { e_state, ion, test };

inline const char* to_string(curve_label label)
{
	switch (label) {
	case curve_label::e_state: return "E_state";
	case curve_label::ion: return "ion";
	case curve_label::test: return "test";
	}
	return "?";
}

/// V(R) = T_e + D_e (exp(-2a(R-R_e)) - 2 exp(-a(R-R_e))); the well bottom
/// sits at T_e - D_e and T_e is the dissociation limit.
struct morse_params {
	double d_e = 0.0;
	double a = 1.0;
	double r_e = 1.0;
	double t_e = 0.0;

	double operator()(double r) const
	{
		const double e = std::exp(-a * (r - r_e));
		return t_e + d_e * (e * e - 2.0 * e);
	}

	/// Builds a Morse curve from spectroscopic constants (all in cm^-1) and
	/// the energy of the well bottom.
	static morse_params from_spectroscopic(double omega_e_cm, double omega_e_x_e_cm, double r_e, double bottom_cm,
	                                       double reduced_mass)
	{
		const double d_e_cm = omega_e_cm * omega_e_cm / (4.0 * omega_e_x_e_cm);
		morse_params p;
		p.d_e = units::from_wavenumber(d_e_cm);
		p.a = std::sqrt(2.0 * reduced_mass * units::from_wavenumber(omega_e_x_e_cm));
		p.r_e = r_e;
		p.t_e = units::from_wavenumber(bottom_cm + d_e_cm);
		return p;
	}
};

namespace detail {

struct spline_deleter {
	void operator()(gsl_spline* s) const { gsl_spline_free(s); }
};

} // namespace detail

/// Natural cubic spline through tabulated (R, V) samples, atomic units.
class tabulated_curve {
public:
	tabulated_curve(std::vector<double> r, std::vector<double> v) : r_(std::move(r)), v_(std::move(v))
	{
		if (r_.size() != v_.size() || r_.size() < 4)
			throw std::invalid_argument("tabulated curve needs at least 4 (R, V) samples");
		for (std::size_t i = 1; i < r_.size(); ++i)
			if (!(r_[i] > r_[i - 1]))
				throw std::invalid_argument("tabulated curve: R samples must be strictly increasing");
		spline_.reset(gsl_spline_alloc(gsl_interp_cspline, r_.size()));
		gsl_spline_init(spline_.get(), r_.data(), v_.data(), r_.size());
	}

	double operator()(double r) const { return gsl_spline_eval(spline_.get(), r, nullptr); }
	double second_derivative(double r) const { return gsl_spline_eval_deriv2(spline_.get(), r, nullptr); }

	const std::vector<double>& nodes() const { return r_; }
	const std::vector<double>& values() const { return v_; }

private:
	std::vector<double> r_;
	std::vector<double> v_;
	std::shared_ptr<gsl_spline> spline_{nullptr, detail::spline_deleter{}};
};

/// An immutable potential energy curve with an explicit domain; evaluation
/// outside the domain is an error.
class potential_curve {
public:
	using analytic_fn = std::function<double(double)>;

	static potential_curve morse(curve_label label, morse_params p, double r_lo = 1.0, double r_hi = 60.0)
	{
		potential_curve c(label, r_lo, r_hi, p.t_e);
		c.repr_ = p;
		return c;
	}

	static potential_curve tabulated(curve_label label, std::vector<double> r, std::vector<double> v)
	{
		const double lo = r.front();
		const double hi = r.back();
		const double limit = v.back();
		potential_curve c(label, lo, hi, limit);
		c.repr_ = tabulated_curve(std::move(r), std::move(v));
		return c;
	}

	static potential_curve analytic(curve_label label, analytic_fn fn, double r_lo, double r_hi,
	                                double dissociation_limit = std::numeric_limits<double>::infinity())
	{
		potential_curve c(label, r_lo, r_hi, dissociation_limit);
		c.repr_ = std::move(fn);
		return c;
	}

	double operator()(double r) const
	{
		if (r < r_lo_ || r > r_hi_) {
			std::ostringstream msg;
			msg << "potential curve '" << to_string(label_) << "' evaluated at R = " << r
			    << " au outside its domain [" << r_lo_ << ", " << r_hi_ << "]";
			throw std::out_of_range(msg.str());
		}
		return std::visit([r](const auto& f) { return f(r); }, repr_);
	}

	curve_label label() const { return label_; }
	double domain_min() const { return r_lo_; }
	double domain_max() const { return r_hi_; }
	/// Energy above which eigenstates are not bound.
	double dissociation_limit() const { return limit_; }

	const morse_params* as_morse() const { return std::get_if<morse_params>(&repr_); }
	const tabulated_curve* as_tabulated() const { return std::get_if<tabulated_curve>(&repr_); }

private:
	potential_curve(curve_label label, double lo, double hi, double limit)
		: label_(label), r_lo_(lo), r_hi_(hi), limit_(limit)
	{}

	curve_label label_;
	double r_lo_;
	double r_hi_;
	double limit_;
	std::variant<morse_params, tabulated_curve, analytic_fn> repr_;
};

/// hbar^2 N(N+1) / (2 mu R^2).
inline double centrifugal(int n, double r, double reduced_mass)
{
	return static_cast<double>(n) * (n + 1.0) / (2.0 * reduced_mass * r * r);
}

/// Effective potential V(R) + centrifugal(N) + rwa_shift on every grid point.
inline Eigen::VectorXd evaluate(const potential_curve& curve, const radial_grid& grid, int n, double rwa_shift,
                                double reduced_mass)
{
	Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size));
	for (std::size_t i = 0; i < grid.size; ++i) {
		const double r = grid.point(i);
		out[static_cast<Eigen::Index>(i)] = curve(r) + centrifugal(n, r, reduced_mass) + rwa_shift;
	}
	return out;
}

/// E-state and ion curves of one molecule plus its nuclear reduced mass.
struct molecular_model {
	potential_curve e_state;
	potential_curve ion;
	double reduced_mass;
	std::string description;
};

/// Reads a two-column (R in au, V in hartree) text file; '#' starts a comment.
inline potential_curve load_tabulated(const std::string& path, curve_label label)
{
	std::ifstream in(path);
	if (!in)
		throw std::runtime_error("cannot open potential file '" + path + "'");
	std::vector<double> r;
	std::vector<double> v;
	std::string line;
	std::size_t line_no = 0;
	while (std::getline(in, line)) {
		++line_no;
		if (const auto hash = line.find('#'); hash != std::string::npos)
			line.erase(hash);
		std::istringstream fields(line);
		double x = 0.0;
		double y = 0.0;
		if (!(fields >> x))
			continue;
		if (!(fields >> y))
			throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected two columns");
		r.push_back(x);
		v.push_back(y);
	}
	return potential_curve::tabulated(label, std::move(r), std::move(v));
}

/// Spectroscopic constants of the bundled model curves, in cm^-1 and au.
struct li2_model_constants {
	static constexpr double e_omega = 260.0;
	static constexpr double e_omega_x = 15.0;
	static constexpr double ion_omega = 280.0;
	static constexpr double ion_omega_x = 12.5;
	static constexpr double r_e = 5.9;
	/// Ion well bottom above the E-state well bottom. A 705 nm photon from
	/// (v=0, N) lands close to 55 cm^-1 above the (v+=0, N+=N) threshold.
	static constexpr double ion_bottom = 14560.1;
};

/// Bundled Morse stand-ins for the Li2 E-state and Li2+ ground state: equal
/// R_e (B_rot ~ 0.48 cm^-1 for both), E-state anharmonicity 2 w_e x_e = 30
/// cm^-1, and an ion ladder slightly stiffer than the E-state ladder so the
/// v+ = v_E photoelectron bands move down by 25, 30, 35, 40 cm^-1 per level.
inline molecular_model load_model_li2()
{
	using k = li2_model_constants;
	const double mu = units::li2_reduced_mass;
	auto e = morse_params::from_spectroscopic(k::e_omega, k::e_omega_x, k::r_e, 0.0, mu);
	auto ion = morse_params::from_spectroscopic(k::ion_omega, k::ion_omega_x, k::r_e, k::ion_bottom, mu);
	return {potential_curve::morse(curve_label::e_state, e), potential_curve::morse(curve_label::ion, ion), mu,
	        "bundled Morse model for 7Li2 E(1Sigma_g+) and 7Li2+ X(2Sigma_g+)"};
}

} // namespace rotwave
