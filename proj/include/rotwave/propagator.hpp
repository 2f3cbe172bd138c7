#pragma once

// Split-operator propagation of the coupled E-state / ion + electron
// equations in the rotating-wave approximation:
//
//   exp(-iH dt) ~ T(dt/2) V(dt/2) W(t + dt/2; dt) V(dt/2) T(dt/2)
//
// T is applied in momentum space (FFT), V is diagonal on the grid and W is
// the laser coupling between bound and ion channels, exponentiated exactly.

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "rotwave/angmom.hpp"
#include "rotwave/error.hpp"
#include "rotwave/fft.hpp"
#include "rotwave/grid.hpp"
#include "rotwave/potentials.hpp"
#include "rotwave/quantumstate.hpp"
#include "rotwave/units.hpp"

namespace rotwave {

/// Linearly polarized probe E0 f(t) cos(omega t), f(t) = sin^2(pi t / 2tau)
/// on [0, 2tau]. All fields in atomic units; tau is the FWHM.
struct pulse_params {
	double amplitude = 0.0;
	double omega = 0.0;
	double tau = 0.0;

	static pulse_params from_lab(double e0_au, double omega_cm, double tau_ps)
	{
		return {e0_au, units::from_wavenumber(omega_cm), units::from_ps(tau_ps)};
	}

	double duration() const { return 2.0 * tau; }

	double envelope(double t) const
	{
		if (t <= 0.0 || t >= duration())
			return 0.0;
		const double s = std::sin(units::pi * t / duration());
		return s * s;
	}

	/// Rotating-wave coupling amplitude E0 f(t) / 2.
	double rwa_amplitude(double t) const { return 0.5 * amplitude * envelope(t); }

	/// |integral f(t) exp(i u t) dt| for detuning u (hartree).
	double envelope_spectrum(double u) const
	{
		const double big_t = duration();
		const double w = 2.0 * units::pi / big_t;
		auto half_sinc = [big_t](double x) {
			const double y = 0.5 * x * big_t;
			return std::abs(y) < 1e-8 ? 0.5 * big_t : std::sin(y) / x;
		};
		return std::abs(half_sinc(u) + 0.5 * (half_sinc(u + w) + half_sinc(u - w)));
	}

	/// Full width at half maximum of |spectrum|^2, in hartree.
	double spectral_fwhm() const
	{
		const double peak = envelope_spectrum(0.0);
		const double target = peak / std::sqrt(2.0);
		double lo = 0.0;
		double hi = 2.0 * units::pi / duration();
		for (int i = 0; i < 200; ++i) {
			const double mid = 0.5 * (lo + hi);
			(envelope_spectrum(mid) > target ? lo : hi) = mid;
		}
		return lo + hi;
	}
};

struct propagation_config {
	double dt = units::from_fs(4.0);
	/// Steps between diagnostic log lines; 0 disables logging.
	int log_every = 0;
	/// Steps between finiteness checks.
	int check_every = 100;
};

/// Owns the precomputed operators for one channel layout (one M).
class propagator {
public:
	propagator(const molecular_model& model, const radial_grid& grid, const channel_layout& layout,
	           const quantum_defects& defects, double omega, double dipole = 1.0)
		: grid_(grid), layout_(layout), labels_(layout.labels())
	{
		grid_.validate();
		if (!grid_.is_power_of_two())
			throw std::invalid_argument("propagator: grid length must be a power of two");

		const auto n = static_cast<Eigen::Index>(grid_.size);
		const Eigen::VectorXd k = grid_.wavenumbers();
		kinetic_ = k.array().square() / (2.0 * model.reduced_mass);

		const auto n_b = static_cast<Eigen::Index>(layout.bound_count());
		const auto n_c = static_cast<Eigen::Index>(layout.ion_count());
		potential_.resize(n, n_b + n_c);
		Eigen::Index col = 0;
		for (int n_e : layout.bound_n)
			potential_.col(col++) = evaluate(model.e_state, grid_, n_e, 0.0, model.reduced_mass);
		for (const auto& c : layout.ion) {
			const Eigen::VectorXd base = evaluate(model.ion, grid_, c.n_plus, -omega, model.reduced_mass);
			for (int j = 0; j < layout.bins.count; ++j)
				potential_.col(col++) = base.array() + layout.bins.center(j);
		}

		// W_{b,(c,j)} = -A(t) M^{c}_{b} sqrt(d eps); C0 is W at unit amplitude.
		const auto table = make_coupling_matrix(layout.bound_n, layout.ion, layout.big_m, defects, dipole);
		const double weight = std::sqrt(layout.bins.width());
		Eigen::MatrixXcd c0(n_b, n_c);
		for (Eigen::Index b = 0; b < n_b; ++b)
			for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(layout.ion.size()); ++c)
				for (int j = 0; j < layout.bins.count; ++j)
					c0(b, c * layout.bins.count + j) = -table.values(b, c) * weight;
		coupling_ = c0;

		if (n_b > 0 && n_c > 0) {
			const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(c0, Eigen::ComputeThinU | Eigen::ComputeThinV);
			const Eigen::VectorXd& s = svd.singularValues();
			Eigen::Index rank = 0;
			while (rank < s.size() && s[rank] > 1e-14 * s[0])
				++rank;
			sigma_ = s.head(rank);
			u_ = svd.matrixU().leftCols(rank);
			v_ = svd.matrixV().leftCols(rank);
		}
	}

	const channel_layout& layout() const { return layout_; }
	const std::vector<channel_label>& labels() const { return labels_; }
	/// Bound x ion coupling at unit RWA amplitude.
	const Eigen::MatrixXcd& coupling() const { return coupling_; }
	const Eigen::MatrixXd& effective_potentials() const { return potential_; }

	/// Fresh, empty state with this propagator's channel layout.
	wavepacket_state make_state() const { return {grid_, labels_, layout_.bins.width()}; }

	void kinetic_half_step(wavepacket_state& state, double dt) const
	{
		check_layout(state);
		batched_fft fft(state.data().data(), static_cast<int>(grid_.size), static_cast<int>(state.channel_count()));
		apply_kinetic(state, fft, 0.5 * dt);
	}

	void potential_half_step(wavepacket_state& state, double dt) const
	{
		check_layout(state);
		state.data().array() *= potential_phases(0.5 * dt).array();
	}

	/// Applies exp(-i W(t) dt) with W sampled at time t.
	void interaction_step(wavepacket_state& state, double t, double dt, const pulse_params& pulse) const
	{
		check_layout(state);
		apply_interaction(state, pulse.rwa_amplitude(t), dt);
	}

	/// exp(-i W dt) for an explicit RWA amplitude A.
	void apply_interaction(wavepacket_state& state, double amplitude, double dt) const
	{
		const Eigen::Index rank = sigma_.size();
		if (rank == 0 || amplitude == 0.0 || dt == 0.0)
			return;
		const auto n_b = static_cast<Eigen::Index>(layout_.bound_count());
		const auto n_c = static_cast<Eigen::Index>(layout_.ion_count());
		auto bound = state.data().leftCols(n_b);
		auto ion = state.data().rightCols(n_c);

		const Eigen::MatrixXcd bound_t = bound * u_.conjugate();
		const Eigen::MatrixXcd ion_t = ion * v_.conjugate();
		const Eigen::ArrayXd theta = amplitude * dt * sigma_.array();
		const Eigen::RowVectorXcd cos_t = theta.cos().matrix().transpose().cast<std::complex<double>>();
		const Eigen::RowVectorXcd sin_t = theta.sin().matrix().transpose().cast<std::complex<double>>();
		const std::complex<double> i{0.0, 1.0};

		Eigen::MatrixXcd bound_delta(bound_t.rows(), rank);
		Eigen::MatrixXcd ion_delta(ion_t.rows(), rank);
		for (Eigen::Index r = 0; r < rank; ++r) {
			bound_delta.col(r) = (cos_t[r] - 1.0) * bound_t.col(r) - i * sin_t[r] * ion_t.col(r);
			ion_delta.col(r) = (cos_t[r] - 1.0) * ion_t.col(r) - i * sin_t[r] * bound_t.col(r);
		}
		bound += bound_delta * u_.transpose();
		ion += ion_delta * v_.transpose();
	}

	/// One symmetric step T V W V T from time t, field sampled at t + dt/2.
	void step(wavepacket_state& state, double t, double dt, const pulse_params& pulse) const
	{
		check_layout(state);
		batched_fft fft(state.data().data(), static_cast<int>(grid_.size), static_cast<int>(state.channel_count()));
		const Eigen::MatrixXcd phases = potential_phases(0.5 * dt);
		apply_kinetic(state, fft, 0.5 * dt);
		state.data().array() *= phases.array();
		apply_interaction(state, pulse.rwa_amplitude(t + 0.5 * dt), dt);
		state.data().array() *= phases.array();
		apply_kinetic(state, fft, 0.5 * dt);
		state.set_time(t + dt);
	}

	/// Propagates from state.time() to the end of the pulse. The last step is
	/// shortened when dt does not divide the remaining interval. Consecutive
	/// kinetic half steps are fused.
	void propagate(wavepacket_state& state, const pulse_params& pulse, const propagation_config& config,
	               std::ostream* log = nullptr) const
	{
		run(state, pulse, config, step_sizes(state.time(), pulse.duration(), config.dt), +1, log);
	}

	/// Exact inverse of propagate(): undoes the forward step sequence that
	/// ends at the pulse end and started at `t_start`.
	void propagate_backward(wavepacket_state& state, const pulse_params& pulse, const propagation_config& config,
	                        double t_start = 0.0, std::ostream* log = nullptr) const
	{
		auto steps = step_sizes(t_start, pulse.duration(), config.dt);
		std::reverse(steps.begin(), steps.end());
		run(state, pulse, config, steps, -1, log);
	}

	static std::vector<double> step_sizes(double t_begin, double t_end, double dt)
	{
		if (!(dt > 0.0))
			throw std::invalid_argument("propagate: time step must be positive");
		std::vector<double> out;
		const double span = t_end - t_begin;
		if (span <= 0.0)
			return out;
		const auto full = static_cast<std::size_t>(std::floor(span / dt + 1e-9));
		out.assign(full, dt);
		const double rest = span - static_cast<double>(full) * dt;
		if (rest > 1e-9 * dt)
			out.push_back(rest);
		return out;
	}

private:
	void check_layout(const wavepacket_state& state) const
	{
		if (!(state.grid() == grid_) || state.labels() != labels_)
			throw std::invalid_argument("propagator: state layout does not match the propagator");
	}

	Eigen::MatrixXcd potential_phases(double tau) const
	{
		const std::complex<double> minus_i{0.0, -1.0};
		return (minus_i * tau * potential_.cast<std::complex<double>>()).array().exp().matrix();
	}

	void apply_kinetic(wavepacket_state& state, batched_fft& fft, double tau) const
	{
		if (tau == 0.0)
			return;
		const std::complex<double> minus_i{0.0, -1.0};
		const Eigen::VectorXcd phase = (minus_i * tau * kinetic_.cast<std::complex<double>>()).array().exp()
			/ static_cast<double>(grid_.size);
		fft.forward();
		state.data().array().colwise() *= phase.array();
		fft.backward();
	}

	void run(wavepacket_state& state, const pulse_params& pulse, const propagation_config& config,
	         const std::vector<double>& steps, int direction, std::ostream* log) const
	{
		check_layout(state);
		if (steps.empty())
			return;
		batched_fft fft(state.data().data(), static_cast<int>(grid_.size), static_cast<int>(state.channel_count()));

		double t = state.time();
		double cached_dt = 0.0;
		Eigen::MatrixXcd phases;
		double pending_kinetic = 0.0;
		const double initial_max = std::max(state.max_amplitude().first, 1e-300);

		for (std::size_t s = 0; s < steps.size(); ++s) {
			const double h = direction * steps[s];
			if (h != cached_dt) {
				phases = potential_phases(0.5 * h);
				cached_dt = h;
			}
			apply_kinetic(state, fft, pending_kinetic + 0.5 * h);
			state.data().array() *= phases.array();
			apply_interaction(state, pulse.rwa_amplitude(t + 0.5 * h), h);
			state.data().array() *= phases.array();
			pending_kinetic = 0.5 * h;
			t += h;

			const bool last = s + 1 == steps.size();
			if (last)
				apply_kinetic(state, fft, pending_kinetic);
			if (last || (config.check_every > 0 && (s + 1) % static_cast<std::size_t>(config.check_every) == 0))
				check_finite(state, s, initial_max);
			if (log != nullptr && config.log_every > 0 && ((s + 1) % static_cast<std::size_t>(config.log_every) == 0 || last))
				*log << "step " << s + 1 << " t=" << units::to_ps(t) << " ps norm=" << state.norm()
				     << " bound=" << state.bound_population() << " ion=" << state.ion_population() << '\n';
		}
		state.set_time(t);
	}

	static void check_finite(const wavepacket_state& state, std::size_t step, double initial_max)
	{
		const auto [amp, where] = state.max_amplitude();
		if (!state.all_finite() || !(amp < 1e6 * initial_max)) {
			std::ostringstream msg;
			msg << "propagation diverged at step " << step + 1 << ": max |psi| = " << amp << " in channel "
			    << state.labels()[where];
			throw numerical_error(msg.str());
		}
	}

	radial_grid grid_;
	channel_layout layout_;
	std::vector<channel_label> labels_;
	Eigen::VectorXd kinetic_;
	Eigen::MatrixXd potential_;
	Eigen::MatrixXcd coupling_;
	Eigen::VectorXd sigma_;
	Eigen::MatrixXcd u_;
	Eigen::MatrixXcd v_;
};

} // namespace rotwave
