#pragma once

// Photoelectron observables computed from final wave-packet states:
// angle-resolved and angle-integrated spectra, signal differences,
// Franck-Condon renormalization and register readout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "rotwave/boundstates.hpp"
#include "rotwave/error.hpp"
#include "rotwave/quantumstate.hpp"
#include "rotwave/units.hpp"

namespace rotwave {

/// One photoelectron ejection direction with its solid-angle weight.
struct direction {
	double theta = 0.0;
	double phi = 0.0;
	double weight = 0.0;
};

/// Product grid of 25 Gauss-Legendre nodes in cos(theta) and 13 uniform
/// azimuths: 325 directions whose weights sum to 4 pi. The rule integrates
/// the l = 1 densities exactly.
inline const std::vector<direction>& angular_grid()
{
	static const std::vector<direction> grid = [] {
		using rule = boost::math::quadrature::gauss<double, 25>;
		const auto& abscissa = rule::abscissa();
		const auto& weights = rule::weights();
		std::vector<std::pair<double, double>> nodes; // (x, w) over [-1, 1]
		for (std::size_t i = 0; i < abscissa.size(); ++i) {
			nodes.emplace_back(abscissa[i], weights[i]);
			if (abscissa[i] != 0.0)
				nodes.emplace_back(-abscissa[i], weights[i]);
		}
		std::sort(nodes.begin(), nodes.end());
		constexpr int n_phi = 13;
		std::vector<direction> out;
		out.reserve(nodes.size() * n_phi);
		for (const auto& [x, w] : nodes)
			for (int k = 0; k < n_phi; ++k)
				out.push_back({std::acos(x), 2.0 * units::pi * k / n_phi, w * 2.0 * units::pi / n_phi});
		return out;
	}();
	return grid;
}

/// |Y_{1m}(theta, phi)|^2.
inline double p_wave_density(int m, double theta)
{
	if (m == 0) {
		const double c = std::cos(theta);
		return 3.0 / (4.0 * units::pi) * c * c;
	}
	if (std::abs(m) == 1) {
		const double s = std::sin(theta);
		return 3.0 / (8.0 * units::pi) * s * s;
	}
	throw std::invalid_argument("p_wave_density: |m| must be at most 1");
}

/// Key of the per-channel breakdown: (N+, m, M).
struct breakdown_key {
	int n_plus;
	int m;
	int big_m;
	friend auto operator<=>(const breakdown_key&, const breakdown_key&) = default;
};

/// Photoelectron spectra in arbitrary units. `total[j]` is a density in
/// 1/hartree: sum_j total[j] * bins.width() equals the summed ion norm.
struct spectrum_result {
	energy_bins bins;
	Eigen::VectorXd total;
	std::map<breakdown_key, Eigen::VectorXd> channels;
	/// Rows: energy bins; columns: directions of angular_grid().
	Eigen::MatrixXd angular;
	std::map<std::string, std::string> metadata;

	/// Spectrum of one ion rotational channel summed over m and M.
	Eigen::VectorXd rotational_channel(int n_plus) const
	{
		Eigen::VectorXd out = Eigen::VectorXd::Zero(bins.count);
		for (const auto& [key, p] : channels)
			if (key.n_plus == n_plus)
				out += p;
		return out;
	}

	std::set<int> rotational_channels() const
	{
		std::set<int> out;
		for (const auto& [key, p] : channels)
			out.insert(key.n_plus);
		return out;
	}

	/// Sum_j P_j d(eps) over all bins.
	double integral() const { return total.sum() * bins.width(); }
};

/// Ion-channel populations of one final state keyed by (N+, m, M), as
/// densities per hartree.
inline std::map<breakdown_key, Eigen::VectorXd> channel_spectra(const wavepacket_state& state,
                                                                 const energy_bins& bins)
{
	if (!(state.bin_width() > 0.0))
		throw std::invalid_argument("channel_spectra: state has no energy-bin width");
	if (std::abs(state.bin_width() - bins.width()) > 1e-12 * bins.width())
		throw std::invalid_argument("channel_spectra: state bin width does not match the energy grid");
	std::map<breakdown_key, Eigen::VectorXd> out;
	const double scale = state.grid().spacing() / state.bin_width();
	for (std::size_t c = 0; c < state.channel_count(); ++c) {
		const auto& l = state.labels()[c];
		if (l.is_bound())
			continue;
		if (l.bin < 0 || l.bin >= bins.count)
			throw std::out_of_range("channel_spectra: energy bin index outside the bin table");
		auto [it, fresh] = out.try_emplace({l.n, l.m, l.big_m}, Eigen::VectorXd::Zero(bins.count));
		it->second[l.bin] += state.channel(c).squaredNorm() * scale;
	}
	return out;
}

inline Eigen::MatrixXd angular_distribution(const std::map<breakdown_key, Eigen::VectorXd>& channels,
                                            const energy_bins& bins)
{
	const auto& dirs = angular_grid();
	Eigen::MatrixXd out = Eigen::MatrixXd::Zero(bins.count, static_cast<Eigen::Index>(dirs.size()));
	for (const auto& [key, p] : channels) {
		Eigen::RowVectorXd density(static_cast<Eigen::Index>(dirs.size()));
		for (std::size_t d = 0; d < dirs.size(); ++d)
			density[static_cast<Eigen::Index>(d)] = p_wave_density(key.m, dirs[d].theta);
		out += p * density;
	}
	return out;
}

/// P_M(eps, k) for one final state: rows are energy bins, columns follow
/// angular_grid().
inline Eigen::MatrixXd angular_distribution(const wavepacket_state& state, const energy_bins& bins)
{
	return angular_distribution(channel_spectra(state, bins), bins);
}

/// Angle integral of an angular distribution on angular_grid().
inline Eigen::VectorXd integrate_angles(const Eigen::MatrixXd& angular)
{
	const auto& dirs = angular_grid();
	Eigen::VectorXd w(static_cast<Eigen::Index>(dirs.size()));
	for (std::size_t d = 0; d < dirs.size(); ++d)
		w[static_cast<Eigen::Index>(d)] = dirs[d].weight;
	return angular * w;
}

/// Observables of the final state of one projection M.
struct projection_spectrum {
	int big_m = 0;
	radial_grid grid;
	std::map<breakdown_key, Eigen::VectorXd> channels;
	Eigen::MatrixXd angular;
};

inline projection_spectrum project(const wavepacket_state& state, const energy_bins& bins)
{
	std::optional<int> big_m;
	for (const auto& l : state.labels()) {
		if (big_m && *big_m != l.big_m)
			throw std::invalid_argument("energy_spectrum: state mixes several M values");
		big_m = l.big_m;
	}
	if (!big_m)
		throw std::invalid_argument("energy_spectrum: state has no channels");
	projection_spectrum out{*big_m, state.grid(), channel_spectra(state, bins), {}};
	out.angular = angular_distribution(out.channels, bins);
	return out;
}

/// Incoherent sum over M = -N_X .. N_X. A missing or duplicated projection
/// is an error.
inline spectrum_result combine_projections(const std::vector<projection_spectrum>& parts, int n_x,
                                           const energy_bins& bins)
{
	std::map<int, const projection_spectrum*> by_m;
	for (const auto& p : parts)
		if (!by_m.emplace(p.big_m, &p).second)
			throw std::invalid_argument("energy_spectrum: duplicate final state for M = " + std::to_string(p.big_m));
	for (int m = -n_x; m <= n_x; ++m)
		if (!by_m.count(m))
			throw std::invalid_argument("energy_spectrum: missing final state for M = " + std::to_string(m));

	spectrum_result out;
	out.bins = bins;
	out.total = Eigen::VectorXd::Zero(bins.count);
	out.angular = Eigen::MatrixXd::Zero(bins.count, static_cast<Eigen::Index>(angular_grid().size()));
	for (const auto& [m, part] : by_m) {
		if (!(part->grid == by_m.begin()->second->grid))
			throw std::invalid_argument("energy_spectrum: final states live on different grids");
		for (const auto& [key, p] : part->channels) {
			out.total += p;
			out.channels.emplace(key, p);
		}
		out.angular += part->angular;
	}
	return out;
}

inline spectrum_result energy_spectrum(const std::vector<wavepacket_state>& finals, int n_x,
                                       const energy_bins& bins = {})
{
	if (finals.empty())
		throw std::invalid_argument("energy_spectrum: no final states");
	std::vector<projection_spectrum> parts;
	parts.reserve(finals.size());
	for (const auto& s : finals)
		parts.push_back(project(s, bins));
	return combine_projections(parts, n_x, bins);
}

/// S(n, eps) = P(n, eps) - P(0, eps).
inline Eigen::VectorXd signal_difference(const spectrum_result& p_n, const spectrum_result& p_0)
{
	if (!(p_n.bins == p_0.bins) || p_n.total.size() != p_0.total.size())
		throw std::invalid_argument("signal_difference: spectra use different energy grids");
	return p_n.total - p_0.total;
}

/// Energy window of one vibrational band v+ = v_E = v.
struct band {
	int v = 0;
	double center_cm = 0.0;
	double lo_cm = 0.0;
	double hi_cm = 0.0;
	double franck_condon = 1.0;

	bool contains(double eps_cm) const { return eps_cm >= lo_cm && eps_cm <= hi_cm; }
};

/// Bands for v = 0 .. n_v-1 centered on the main (N+ = N_E) peaks of the
/// doublet N_E = N_A -+ 1. Each half-width is 3 spectral FWHM, shrunk to
/// half the distance to the neighbouring band when that is narrower.
/// The levels of both curves for N_A -+ 1 must be precomputed.
inline std::vector<band> make_band_table(const level_table& levels, int n_a, int n_v, double omega,
                                         double spectral_fwhm_cm)
{
	if (n_v < 1)
		throw std::invalid_argument("make_band_table: need at least one band");
	std::vector<band> out;
	for (int v = 0; v < n_v; ++v) {
		double sum = 0.0;
		int count = 0;
		for (int n_e : {n_a - 1, n_a + 1}) {
			if (n_e < 0)
				continue;
			const auto eps = predict_peak(levels.level(curve_label::e_state, v, n_e),
			                              levels.level(curve_label::ion, v, n_e), omega);
			if (!eps)
				throw std::invalid_argument("make_band_table: band v = " + std::to_string(v) + " is closed");
			sum += *eps;
			++count;
		}
		const int n_ref = std::max(n_a - 1, 0);
		out.push_back({v, sum / count, 0.0, 0.0,
		               franck_condon(levels.level(curve_label::e_state, v, n_ref),
		                             levels.level(curve_label::ion, v, n_ref))});
	}
	for (std::size_t i = 0; i < out.size(); ++i) {
		double half = 3.0 * spectral_fwhm_cm;
		if (i > 0)
			half = std::min(half, 0.5 * std::abs(out[i].center_cm - out[i - 1].center_cm));
		if (i + 1 < out.size())
			half = std::min(half, 0.5 * std::abs(out[i + 1].center_cm - out[i].center_cm));
		out[i].lo_cm = out[i].center_cm - half;
		out[i].hi_cm = out[i].center_cm + half;
	}
	return out;
}

/// Index of the band containing eps, if any.
inline std::optional<std::size_t> band_of(const std::vector<band>& bands, double eps_cm)
{
	for (std::size_t b = 0; b < bands.size(); ++b)
		if (bands[b].contains(eps_cm))
			return b;
	return std::nullopt;
}

/// Integral of a density over the bins that fall inside one band.
inline double band_integral(const Eigen::VectorXd& p, const energy_bins& bins, const band& b)
{
	double sum = 0.0;
	for (int j = 0; j < bins.count; ++j)
		if (b.contains(bins.center_cm(j)))
			sum += p[j];
	return sum * bins.width();
}

struct renormalized_signal {
	Eigen::VectorXd values;
	/// True for bins outside every band; their values are passed through.
	std::vector<bool> outside;
};

/// S / F per bin, with F the Franck-Condon factor of the band holding the bin.
inline renormalized_signal fc_renormalize(const Eigen::VectorXd& s, const energy_bins& bins,
                                          const std::vector<band>& bands, double threshold = 1e-6)
{
	if (s.size() != bins.count)
		throw std::invalid_argument("fc_renormalize: signal length does not match the energy grid");
	for (const auto& b : bands)
		if (std::abs(b.franck_condon) < threshold) {
			std::ostringstream msg;
			msg << "fc_renormalize: Franck-Condon factor " << b.franck_condon << " of band v = " << b.v
			    << " is below " << threshold;
			throw std::domain_error(msg.str());
		}
	renormalized_signal out{s, std::vector<bool>(static_cast<std::size_t>(bins.count), true)};
	for (int j = 0; j < bins.count; ++j)
		if (const auto b = band_of(bands, bins.center_cm(j))) {
			out.values[j] = s[j] / bands[*b].franck_condon;
			out.outside[static_cast<std::size_t>(j)] = false;
		}
	return out;
}

/// Reference spectra for register readout: P for the all-zero register and
/// for the all-ones register, computed with the same configuration.
struct decode_calibration {
	spectrum_result zeros;
	spectrum_result ones;
	double guard = 0.1;
};

struct band_reading {
	int v = 0;
	/// Projection of P(n) - P(0) onto the calibrated template, scaled so
	/// that bit 0 reads 0 and bit 1 reads 1.
	double score = 0.0;
	/// Integrated band intensity relative to the all-zero reference.
	double intensity_ratio = 1.0;
	/// Integrated |P(1) - P(0)| over the band relative to the P(0) band integral.
	double contrast = 0.0;
	bool bit = false;
};

struct decode_result {
	std::uint64_t value = 0;
	std::vector<band_reading> bands;
};

/// Reads the register back band by band. In each band the deviation of P(n)
/// from the all-zero reference is projected onto the calibrated template
/// T_v = P(all ones) - P(all zeros); the bit is set when the normalized
/// projection exceeds 1/2. A score within `guard` of 1/2 is ambiguous.
inline decode_result decode(const spectrum_result& p, const std::vector<band>& bands, const decode_calibration& cal)
{
	if (!(p.bins == cal.zeros.bins) || !(p.bins == cal.ones.bins))
		throw std::invalid_argument("decode: spectrum and calibration use different energy grids");
	const Eigen::VectorXd signal = p.total - cal.zeros.total;
	const Eigen::VectorXd templ = cal.ones.total - cal.zeros.total;
	decode_result out;
	for (const auto& b : bands) {
		double num = 0.0;
		double den = 0.0;
		double abs_t = 0.0;
		for (int j = 0; j < p.bins.count; ++j) {
			if (!b.contains(p.bins.center_cm(j)))
				continue;
			num += signal[j] * templ[j];
			den += templ[j] * templ[j];
			abs_t += std::abs(templ[j]);
		}
		const double ref = band_integral(cal.zeros.total, p.bins, b);
		if (!(den > 0.0) || !(ref > 0.0))
			throw decode_ambiguity(b.v, "decode: band v = " + std::to_string(b.v) + " carries no calibration signal");
		band_reading r;
		r.v = b.v;
		r.score = num / den;
		r.intensity_ratio = band_integral(p.total, p.bins, b) / ref;
		r.contrast = abs_t * p.bins.width() / ref;
		if (std::abs(r.score - 0.5) < cal.guard) {
			std::ostringstream msg;
			msg << "decode: band v = " << b.v << " is ambiguous (score " << r.score << ")";
			throw decode_ambiguity(b.v, msg.str());
		}
		r.bit = r.score > 0.5;
		if (r.bit)
			out.value |= std::uint64_t{1} << b.v;
		out.bands.push_back(r);
	}
	return out;
}

} // namespace rotwave
