#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rotwave/angmom.hpp"
#include "rotwave/boundstates.hpp"
#include "rotwave/grid.hpp"
#include "rotwave/units.hpp"

namespace rotwave {

/// Uniform discretization of the photoelectron energy: `count` values from
/// `min_cm` to `max_cm` inclusive.
struct energy_bins {
	double min_cm = 10.0;
	double max_cm = 190.0;
	int count = 150;

	double width_cm() const { return count > 1 ? (max_cm - min_cm) / (count - 1) : 1.0; }
	double width() const { return units::from_wavenumber(width_cm()); }
	double center_cm(int j) const { return min_cm + width_cm() * j; }
	double center(int j) const { return units::from_wavenumber(center_cm(j)); }

	std::vector<double> centers_cm() const
	{
		std::vector<double> out(static_cast<std::size_t>(count));
		for (int j = 0; j < count; ++j)
			out[static_cast<std::size_t>(j)] = center_cm(j);
		return out;
	}

	bool contains_cm(double eps) const { return eps >= min_cm && eps <= max_cm; }

	friend bool operator==(const energy_bins&, const energy_bins&) = default;
};

enum class channel_kind : std::uint8_t { bound = 0, ion = 1 };

/// One radial wave packet: E-state (N_E, M) or ion (N+, l, m, M, bin).
struct channel_label {
	channel_kind kind = channel_kind::bound;
	int n = 0; // N_E or N+
	int l = 0;
	int m = 0;
	int big_m = 0;
	int bin = -1;

	static channel_label bound(int n_e, int big_m) { return {channel_kind::bound, n_e, 0, 0, big_m, -1}; }
	static channel_label ion(const ion_channel& c, int big_m, int bin)
	{
		return {channel_kind::ion, c.n_plus, c.l, c.m, big_m, bin};
	}

	bool is_bound() const { return kind == channel_kind::bound; }
	int ion_projection() const { return big_m - m; }

	friend auto operator<=>(const channel_label&, const channel_label&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const channel_label& c)
{
	if (c.is_bound())
		return os << "bound(N_E=" << c.n << ",M=" << c.big_m << ")";
	return os << "ion(N+=" << c.n << ",l=" << c.l << ",m=" << c.m << ",M=" << c.big_m << ",bin=" << c.bin << ")";
}

/// Which channels one propagation carries for a fixed projection M.
struct channel_layout {
	int big_m = 0;
	std::vector<int> bound_n;
	std::vector<ion_channel> ion;
	energy_bins bins;

	std::size_t bound_count() const { return bound_n.size(); }
	std::size_t ion_count() const { return ion.size() * static_cast<std::size_t>(bins.count); }
	std::size_t channel_count() const { return bound_count() + ion_count(); }

	/// Bound channels first, then ion channels with the energy bin innermost.
	std::vector<channel_label> labels() const
	{
		std::vector<channel_label> out;
		out.reserve(channel_count());
		for (int n : bound_n)
			out.push_back(channel_label::bound(n, big_m));
		for (const auto& c : ion)
			for (int j = 0; j < bins.count; ++j)
				out.push_back(channel_label::ion(c, big_m, j));
		return out;
	}
};

/// Layout for the E-state doublet N_E = N_A -+ 1 at projection M.
inline channel_layout make_layout(int n_a, int big_m, const energy_bins& bins, int l = 1)
{
	channel_layout layout;
	layout.big_m = big_m;
	layout.bins = bins;
	for (int n_e : {n_a - 1, n_a + 1})
		if (n_e >= 0 && std::abs(big_m) <= n_e)
			layout.bound_n.push_back(n_e);
	layout.ion = reachable_ion_channels(layout.bound_n, big_m, l);
	return layout;
}

/// All channels of one propagation on the shared grid. Column c of `data`
/// holds channel `labels[c]`. Ion amplitudes carry the sqrt(d epsilon) bin
/// weight, so the plain sum of |psi|^2 dR over all channels is the norm.
class wavepacket_state {
public:
	wavepacket_state() = default;

	wavepacket_state(radial_grid grid, std::vector<channel_label> labels, double bin_width = 0.0)
		: grid_(grid), labels_(std::move(labels)), bin_width_(bin_width)
	{
		data_ = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(grid_.size), static_cast<Eigen::Index>(labels_.size()));
		for (std::size_t c = 0; c < labels_.size(); ++c) {
			if (!index_.emplace(labels_[c], c).second)
				throw std::invalid_argument("wavepacket_state: duplicate channel label");
		}
	}

	const radial_grid& grid() const { return grid_; }
	const std::vector<channel_label>& labels() const { return labels_; }
	std::size_t channel_count() const { return labels_.size(); }
	double bin_width() const { return bin_width_; }

	double time() const { return time_; }
	void set_time(double t) { time_ = t; }

	Eigen::MatrixXcd& data() { return data_; }
	const Eigen::MatrixXcd& data() const { return data_; }

	auto channel(std::size_t c) { return data_.col(static_cast<Eigen::Index>(c)); }
	auto channel(std::size_t c) const { return data_.col(static_cast<Eigen::Index>(c)); }

	std::size_t index_of(const channel_label& label) const
	{
		const auto it = index_.find(label);
		if (it == index_.end()) {
			std::ostringstream msg;
			msg << "wavepacket_state: no channel " << label;
			throw std::out_of_range(msg.str());
		}
		return it->second;
	}

	bool contains(const channel_label& label) const { return index_.count(label) != 0; }

	/// Integral of |psi|^2 dR for one channel.
	double channel_norm(std::size_t c) const { return channel(c).squaredNorm() * grid_.spacing(); }

	double norm() const { return data_.squaredNorm() * grid_.spacing(); }

	double bound_population() const { return population(channel_kind::bound); }
	double ion_population() const { return population(channel_kind::ion); }

	/// Max |psi| over all channels, together with the channel it was found in.
	std::pair<double, std::size_t> max_amplitude() const
	{
		double best = 0.0;
		std::size_t where = 0;
		for (std::size_t c = 0; c < labels_.size(); ++c) {
			const double a = channel(c).cwiseAbs().maxCoeff();
			if (!(a <= best)) {
				best = a;
				where = c;
			}
		}
		return {best, where};
	}

	bool all_finite() const { return data_.allFinite(); }

	/// Text snapshot: a header line, one line per channel label, then the
	/// complex samples channel by channel (real and imaginary parts).
	void write_snapshot(std::ostream& os) const
	{
		os.precision(17);
		os << "rotwave-snapshot 1 " << grid_.r_min << ' ' << grid_.r_max << ' ' << grid_.size << ' '
		   << labels_.size() << ' ' << time_ << ' ' << bin_width_ << '\n';
		for (const auto& l : labels_)
			os << static_cast<int>(l.kind) << ' ' << l.n << ' ' << l.l << ' ' << l.m << ' ' << l.big_m << ' ' << l.bin
			   << '\n';
		for (std::size_t c = 0; c < labels_.size(); ++c)
			for (Eigen::Index i = 0; i < data_.rows(); ++i)
				os << data_(i, static_cast<Eigen::Index>(c)).real() << ' '
				   << data_(i, static_cast<Eigen::Index>(c)).imag() << '\n';
	}

	static wavepacket_state read_snapshot(std::istream& is)
	{
		std::string magic;
		int version = 0;
		radial_grid grid;
		std::size_t n_channels = 0;
		double time = 0.0;
		double bin_width = 0.0;
		if (!(is >> magic >> version >> grid.r_min >> grid.r_max >> grid.size >> n_channels >> time >> bin_width)
		    || magic != "rotwave-snapshot" || version != 1)
			throw std::runtime_error("read_snapshot: bad header");
		std::vector<channel_label> labels(n_channels);
		for (auto& l : labels) {
			int kind = 0;
			if (!(is >> kind >> l.n >> l.l >> l.m >> l.big_m >> l.bin))
				throw std::runtime_error("read_snapshot: truncated label table");
			l.kind = static_cast<channel_kind>(kind);
		}
		wavepacket_state state(grid, std::move(labels), bin_width);
		state.set_time(time);
		for (std::size_t c = 0; c < n_channels; ++c)
			for (std::size_t i = 0; i < grid.size; ++i) {
				double re = 0.0;
				double im = 0.0;
				if (!(is >> re >> im))
					throw std::runtime_error("read_snapshot: truncated samples");
				state.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = {re, im};
			}
		return state;
	}

private:
	double population(channel_kind kind) const
	{
		double sum = 0.0;
		for (std::size_t c = 0; c < labels_.size(); ++c)
			if (labels_[c].kind == kind)
				sum += channel(c).squaredNorm();
		return sum * grid_.spacing();
	}

	radial_grid grid_;
	std::vector<channel_label> labels_;
	std::map<channel_label, std::size_t> index_;
	Eigen::MatrixXcd data_;
	double bin_width_ = 0.0;
	double time_ = 0.0;
};

/// Integer stored as one {0, pi} phase difference per vibrational level.
/// Bit v of the value belongs to level v; bit = 1 is stored as an in-phase
/// doublet (delta phi = 0), bit = 0 as an out-of-phase doublet (delta phi = pi).
struct phase_register {
	int n_v = 1;
	std::uint64_t value = 0;

	bool bit(int v) const { return ((value >> v) & 1u) != 0; }
	double phase_difference(int v) const { return bit(v) ? 0.0 : units::pi; }

	std::vector<double> phase_differences() const
	{
		std::vector<double> out(static_cast<std::size_t>(n_v));
		for (int v = 0; v < n_v; ++v)
			out[static_cast<std::size_t>(v)] = phase_difference(v);
		return out;
	}

	static std::uint64_t capacity(int n_v) { return std::uint64_t{1} << n_v; }
};

inline phase_register encode(std::int64_t n, int n_v)
{
	if (n_v < 1 || n_v > 62)
		throw std::invalid_argument("encode: number of vibrational levels must be in [1, 62]");
	if (n < 0 || static_cast<std::uint64_t>(n) >= phase_register::capacity(n_v)) {
		std::ostringstream msg;
		msg << "encode: integer " << n << " does not fit in " << n_v << " levels (max "
		    << phase_register::capacity(n_v) - 1 << ")";
		throw std::out_of_range(msg.str());
	}
	return {n_v, static_cast<std::uint64_t>(n)};
}

/// Which members of the N_A -+ 1 doublet are populated initially.
enum class doublet_components { both, lower, upper };

/// Initial E-state packet: c_{N_E,M} sum_v exp(i phi_{v,N_E}) chi_{v,N_E}(R)
/// with equal per-level amplitudes, phi = 0 on N_A - 1 and the register's
/// delta phi on N_A + 1. Ion channels start empty. No global renormalization.
inline wavepacket_state assemble_initial(const phase_register& reg, const level_table& levels,
                                         const channel_layout& layout, int n_a, int n_x,
                                         doublet_components components = doublet_components::both)
{
	if (std::abs(layout.big_m) > n_x)
		throw std::invalid_argument("assemble_initial: |M| exceeds N_X");
	wavepacket_state state(levels.grid(), layout.labels(), layout.bins.width());
	for (std::size_t b = 0; b < layout.bound_n.size(); ++b) {
		const int n_e = layout.bound_n[b];
		const bool upper = n_e == n_a + 1;
		if ((components == doublet_components::lower && upper) || (components == doublet_components::upper && !upper))
			continue;
		const double c = prep_coefficient(n_x, n_a, n_e, layout.big_m);
		auto column = state.channel(state.index_of(channel_label::bound(n_e, layout.big_m)));
		for (int v = 0; v < reg.n_v; ++v) {
			const rovib_level* level = nullptr;
			try {
				level = &levels.level(curve_label::e_state, v, n_e);
			} catch (const std::out_of_range& e) {
				throw std::runtime_error(std::string("assemble_initial: missing level: ") + e.what());
			}
			const double phase = upper ? reg.phase_difference(v) : 0.0;
			column += (c * std::polar(1.0, phase)) * level->wavefunction.cast<std::complex<double>>();
		}
	}
	return state;
}

} // namespace rotwave
