// Acceptance checks. Each criterion prints one PASS/FAIL line with the
// measured quantity and its threshold.
//
//   acceptance                 run every criterion
//   acceptance --criterion k   run criterion k only (1..12)
//
// The exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rotwave/experiment.hpp"
#include "rotwave/oracles.hpp"

using namespace rotwave;

namespace {

struct verdict {
	bool pass = false;
	std::string detail;
};

std::string num(double x)
{
	std::ostringstream os;
	os << std::setprecision(4) << x;
	return os.str();
}

int workers()
{
	return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Production setup: default radial and energy grids, N_X = 1, N_A = 2.
struct lab {
	simulator sim;
	double omega;

	lab(int n_v, double target_cm)
		: sim(load_model_li2(), radial_grid{}, energy_bins{}, 1, 2, n_v), omega(sim.calibrate_carrier(target_cm, n_v))
	{}

	static run_case make(double tau_ps, int n_v, std::uint64_t reg, quantum_defects defects = quantum_defects::li2(),
	                     doublet_components doublet = doublet_components::both)
	{
		run_case c{"", tau_ps, "", defects, n_v, reg, doublet};
		c.name = case_name(c);
		return c;
	}

	std::vector<case_result> run(const std::vector<run_case>& cases, double e0 = 1e-4) const
	{
		return sim.run(cases, omega, e0, propagation_config{}, workers());
	}
};

double band_sum(const Eigen::VectorXd& p) { return p.sum(); }

// --- 1 ---------------------------------------------------------------------

verdict wigner3j_oracle()
{
	double worst = 0.0;
	long count = 0;
	for (int j1 = 0; j1 <= 10; ++j1)
		for (int j2 = 0; j2 <= 10; ++j2)
			for (int j3 = std::abs(j1 - j2); j3 <= std::min(10, j1 + j2); ++j3)
				for (int m1 = -j1; m1 <= j1; ++m1)
					for (int m2 = -j2; m2 <= j2; ++m2) {
						const int m3 = -m1 - m2;
						if (std::abs(m3) > j3)
							continue;
						worst = std::max(worst, std::abs(wigner3j(j1, j2, j3, m1, m2, m3)
						                                 - oracles::wigner3j_exact(j1, j2, j3, m1, m2, m3)));
						++count;
					}

	// Both orthogonality relations.
	double ortho = 0.0;
	for (int j1 = 0; j1 <= 10; ++j1)
		for (int j2 = 0; j2 <= 10; ++j2) {
			for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; ++j3)
				for (int k3 = std::abs(j1 - j2); k3 <= j1 + j2; ++k3)
					for (int m3 = -std::min(j3, k3); m3 <= std::min(j3, k3); ++m3) {
						double sum = 0.0;
						for (int m1 = -j1; m1 <= j1; ++m1) {
							const int m2 = -m1 - m3;
							if (std::abs(m2) <= j2)
								sum += (2.0 * j3 + 1.0) * wigner3j(j1, j2, j3, m1, m2, m3) * wigner3j(j1, j2, k3, m1, m2, m3);
						}
						ortho = std::max(ortho, std::abs(sum - (j3 == k3 ? 1.0 : 0.0)));
					}
			for (int m1 = -j1; m1 <= j1; ++m1)
				for (int m2 = -j2; m2 <= j2; ++m2)
					for (int n1 = -j1; n1 <= j1; ++n1) {
						const int n2 = m1 + m2 - n1;
						if (std::abs(n2) > j2)
							continue;
						double sum = 0.0;
						for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; ++j3)
							sum += (2.0 * j3 + 1.0) * wigner3j(j1, j2, j3, m1, m2, -m1 - m2)
								* wigner3j(j1, j2, j3, n1, n2, -m1 - m2);
						ortho = std::max(ortho, std::abs(sum - (m1 == n1 ? 1.0 : 0.0)));
					}
		}
	const bool pass = worst <= 1e-12 && ortho <= 1e-12;
	return {pass, std::to_string(count) + " symbols, max |error| " + num(worst) + ", orthogonality " + num(ortho)
	                  + " (<= 1e-12)"};
}

// --- 2 ---------------------------------------------------------------------

verdict bound_state_oracle()
{
	const radial_grid grid;
	const double mu = units::li2_reduced_mass;

	const double w = units::from_wavenumber(300.0);
	Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size));
	for (std::size_t i = 0; i < grid.size; ++i) {
		const double x = grid.point(i) - 8.75;
		v[static_cast<Eigen::Index>(i)] = 0.5 * mu * w * w * x * x;
	}
	double harmonic = 0.0;
	for (const auto& l : solve_bound(v, 0, 10, grid, mu, v.maxCoeff()))
		harmonic = std::max(harmonic, std::abs(l.energy / oracles::harmonic_level(l.v, w) - 1.0));

	const auto p = morse_params::from_spectroscopic(300.0, 4.5, 7.5, 0.0, mu);
	double morse = 0.0;
	for (const auto& l : solve_bound(potential_curve::morse(curve_label::test, p), 0, 10, grid, mu))
		morse = std::max(morse, std::abs((l.energy - (p.t_e - p.d_e)) / oracles::morse_level(l.v, p.d_e, p.a, mu) - 1.0));

	return {harmonic <= 1e-6 && morse <= 1e-6,
	        "10 levels: harmonic max rel. error " + num(harmonic) + ", Morse " + num(morse) + " (<= 1e-6)"};
}

// --- 3 ---------------------------------------------------------------------

verdict unitarity_and_reversal()
{
	const lab l(1, 55.0);
	const auto c = lab::make(15.0, 1, 1);
	auto state = l.sim.initial_state(c, 0);
	const double before = state.norm();
	const propagator prop(l.sim.model(), l.sim.grid(), l.sim.layout(0), c.defects, l.omega);
	const pulse_params long_pulse{1e-4, l.omega, units::from_ps(15.0)};
	const propagation_config cfg;
	prop.propagate(state, long_pulse, cfg);
	const double drift = std::abs(state.norm() / before - 1.0);
	const std::size_t steps = propagator::step_sizes(0.0, long_pulse.duration(), cfg.dt).size();

	const auto start = l.sim.initial_state(c, 0);
	auto back = start;
	const pulse_params short_pulse{1e-4, l.omega, units::from_ps(2.5)};
	prop.propagate(back, short_pulse, cfg);
	prop.propagate_backward(back, short_pulse, cfg);
	const std::complex<double> overlap = start.data().conjugate().cwiseProduct(back.data()).sum() * start.grid().spacing();
	const double fidelity = std::norm(overlap) / (start.norm() * start.norm());

	return {drift <= 1e-8 && fidelity >= 1.0 - 1e-6,
	        std::to_string(steps) + " steps, " + std::to_string(state.channel_count()) + " channels: norm drift "
	            + num(drift) + " (<= 1e-8); reversal infidelity " + num(1.0 - fidelity) + " (<= 1e-6)"};
}

// --- 4 / 5 -----------------------------------------------------------------

// Satellite over main integrated intensity for a single doublet member.
double satellite_ratio(const spectrum_result& s, int n_e)
{
	double main = 0.0;
	double satellite = 0.0;
	for (int n : s.rotational_channels())
		(n == n_e ? main : satellite) += band_sum(s.rotational_channel(n));
	return satellite / main;
}

verdict isotropic_suppression()
{
	const lab l(1, 55.0);
	const auto iso = quantum_defects::isotropic();
	const auto r = l.run({lab::make(15.0, 1, 0, iso, doublet_components::lower),
	                      lab::make(15.0, 1, 0, iso, doublet_components::upper)});
	const double lower = satellite_ratio(r[0].spectrum, 1);
	const double upper = satellite_ratio(r[1].spectrum, 3);
	return {std::max(lower, upper) <= 1e-6,
	        "satellite/main: N_E=1 " + num(lower) + ", N_E=3 " + num(upper) + " (<= 1e-6)"};
}

verdict satellite_branching()
{
	const lab l(1, 55.0);
	const auto r = l.run({lab::make(15.0, 1, 0, quantum_defects::li2(), doublet_components::lower),
	                      lab::make(15.0, 1, 0, quantum_defects::li2(), doublet_components::upper)});
	const double lower = satellite_ratio(r[0].spectrum, 1);
	const double upper = satellite_ratio(r[1].spectrum, 3);
	return {lower >= 0.03 && lower <= 0.3,
	        "N+=3 / N+=1 from N_E=1: " + num(lower) + " (in [0.03, 0.3]); from N_E=3 (N+=1,5 / N+=3): " + num(upper)};
}

// --- 6 / 7 -----------------------------------------------------------------

verdict long_pulse_phase_independence()
{
	const lab l(1, 55.0);
	const auto r = l.run({lab::make(15.0, 1, 0), lab::make(15.0, 1, 1)});
	const Eigen::VectorXd& out = r[0].spectrum.total;
	const Eigen::VectorXd& in = r[1].spectrum.total;
	const double rel = (in - out).cwiseAbs().maxCoeff() / out.maxCoeff();
	return {rel <= 1e-6, "max |P(0) - P(pi)| / max P = " + num(rel) + " (<= 1e-6)"};
}

verdict interference_contrast()
{
	const lab l(1, 55.0);
	const auto r = l.run({lab::make(2.5, 1, 0), lab::make(2.5, 1, 1)});
	const double ratio = r[1].ion_population / r[0].ion_population;
	return {ratio >= 1.5 && ratio <= 2.6, "in-phase / out-of-phase ionization = " + num(ratio) + " (in [1.5, 2.6])"};
}

// --- 8 ---------------------------------------------------------------------

verdict peak_positions()
{
	const lab l(1, 55.0);
	const auto r = l.run({lab::make(15.0, 1, 1)});
	const auto& s = r[0].spectrum;
	const double fwhm = units::to_wavenumber(pulse_params{0.0, l.omega, units::from_ps(15.0)}.spectral_fwhm());

	std::vector<double> predicted;
	const auto& levels = l.sim.levels();
	for (int n_e : {1, 3})
		for (int n_plus = std::abs(n_e - 2); n_plus <= n_e + 2; ++n_plus)
			if (parity_allowed(n_e, n_plus, 1))
				if (const auto eps = predict_peak(levels.level(curve_label::e_state, 0, n_e),
				                                  levels.level(curve_label::ion, 0, n_plus), l.omega))
					predicted.push_back(*eps);

	const Eigen::VectorXd& p = s.total;
	const double floor = 0.01 * p.maxCoeff();
	const double h = s.bins.width_cm();
	int found = 0;
	double worst = 0.0;
	for (int j = 1; j + 1 < s.bins.count; ++j) {
		if (!(p[j] > p[j - 1] && p[j] >= p[j + 1] && p[j] > floor))
			continue;
		const double denom = p[j - 1] - 2.0 * p[j] + p[j + 1];
		const double shift = denom != 0.0 ? 0.5 * (p[j - 1] - p[j + 1]) / denom : 0.0;
		const double center = s.bins.center_cm(j) + shift * h;
		double nearest = 1e300;
		for (double e : predicted)
			nearest = std::min(nearest, std::abs(center - e));
		worst = std::max(worst, nearest);
		++found;
	}
	return {found > 0 && worst <= fwhm,
	        std::to_string(found) + " peaks, worst offset " + num(worst) + " cm^-1 (<= FWHM " + num(fwhm) + " cm^-1)"};
}

// --- 9 ---------------------------------------------------------------------

verdict perturbative_scaling()
{
	const lab l(1, 55.0);
	const auto c = lab::make(2.5, 1, 1);
	const double a = l.run({c}, 1e-4)[0].ion_population;
	const double b = l.run({c}, 2e-4)[0].ion_population;
	const double ratio = b / a;
	return {std::abs(ratio - 4.0) <= 0.04, "P(2 E0) / P(E0) = " + num(ratio) + " (4.00 +- 1%)"};
}

// --- 10 --------------------------------------------------------------------

// Decodes every register 0 .. 2^n_v - 1 against the all-zero and all-ones
// reference spectra. Returns the registers that failed.
std::vector<std::string> sweep(int n_v, double target_cm)
{
	const lab l(n_v, target_cm);
	std::vector<run_case> cases;
	const std::uint64_t count = phase_register::capacity(n_v);
	for (std::uint64_t n = 0; n < count; ++n)
		cases.push_back(lab::make(2.5, n_v, n));
	const auto r = l.run(cases);
	const decode_calibration cal{r.front().spectrum, r.back().spectrum, 0.1};
	const auto bands = l.sim.bands(n_v, l.omega, 2.5);
	std::vector<std::string> failures;
	for (std::uint64_t n = 0; n < count; ++n) {
		try {
			const auto d = decode(r[n].spectrum, bands, cal);
			if (d.value != n)
				failures.push_back(std::to_string(n) + "->" + std::to_string(d.value));
		} catch (const decode_ambiguity& e) {
			failures.push_back(std::to_string(n) + " ambiguous in band " + std::to_string(e.band()));
		}
	}
	return failures;
}

verdict register_round_trip()
{
	const auto two = sweep(2, 80.0);
	const auto five = sweep(5, 160.0);
	std::string detail = "n_v=2: " + std::to_string(4 - two.size()) + "/4 exact; n_v=5: "
		+ std::to_string(32 - five.size()) + "/32 exact";
	for (const auto& f : two)
		detail += "; n_v=2 " + f;
	for (const auto& f : five)
		detail += "; n_v=5 " + f;
	return {two.empty() && five.empty(), detail};
}

// --- 11 --------------------------------------------------------------------

verdict band_isolation()
{
	const lab l(2, 80.0);
	const auto r = l.run({lab::make(2.5, 2, 0), lab::make(2.5, 2, 1), lab::make(2.5, 2, 2)});
	const auto bands = l.sim.bands(2, l.omega, 2.5);
	const auto& bins = r[0].spectrum.bins;
	auto change = [&](const case_result& flipped, const band& other) {
		const double ref = band_integral(r[0].spectrum.total, bins, other);
		return std::abs(band_integral(flipped.spectrum.total, bins, other) / ref - 1.0);
	};
	const double flip0 = change(r[1], bands[1]);
	const double flip1 = change(r[2], bands[0]);
	return {std::max(flip0, flip1) <= 1e-8, "flip v=0 moves band 1 by " + num(flip0) + ", flip v=1 moves band 0 by "
	                                            + num(flip1) + " (<= 1e-8)"};
}

// --- 12 --------------------------------------------------------------------

verdict franck_condon_renormalization()
{
	const lab l(5, 160.0);
	const auto r = l.run({lab::make(2.5, 5, 0), lab::make(2.5, 5, 31)});
	const auto bands = l.sim.bands(5, l.omega, 2.5);
	const auto& bins = r[0].spectrum.bins;
	const auto s = signal_difference(r[1].spectrum, r[0].spectrum);
	const auto sf = fc_renormalize(s, bins, bands);
	std::vector<double> heights;
	for (const auto& b : bands) {
		double top = 0.0;
		for (int j = 0; j < bins.count; ++j)
			if (b.contains(bins.center_cm(j)))
				top = std::max(top, sf.values[j]);
		heights.push_back(top);
	}
	const double hi = *std::max_element(heights.begin(), heights.end());
	const double lo = *std::min_element(heights.begin(), heights.end());
	const double spread = hi > 0.0 ? (hi - lo) / hi : 1.0;
	std::string list;
	for (double x : heights)
		list += (list.empty() ? "" : ", ") + num(x / hi);
	return {spread <= 0.2, "S/F peak heights (relative) " + list + "; spread " + num(spread) + " (<= 0.2)"};
}

struct criterion {
	const char* label;
	std::function<verdict()> check;
};

const std::vector<criterion>& criteria()
{
	static const std::vector<criterion> all{
		{"wigner3j_oracle", wigner3j_oracle},
		{"bound_state_oracle", bound_state_oracle},
		{"unitarity_and_reversal", unitarity_and_reversal},
		{"isotropic_suppression", isotropic_suppression},
		{"satellite_branching", satellite_branching},
		{"long_pulse_phase_independence", long_pulse_phase_independence},
		{"interference_contrast", interference_contrast},
		{"peak_positions", peak_positions},
		{"perturbative_scaling", perturbative_scaling},
		{"register_round_trip", register_round_trip},
		{"band_isolation", band_isolation},
		{"franck_condon_renormalization", franck_condon_renormalization},
	};
	return all;
}

} // namespace

int main(int argc, char** argv)
{
	std::vector<int> selected;
	for (int i = 1; i < argc; ++i) {
		const std::string arg = argv[i];
		if (arg == "--criterion" && i + 1 < argc) {
			selected.push_back(std::atoi(argv[++i]));
		} else {
			std::cerr << "usage: acceptance [--criterion k]...\n";
			return 64;
		}
	}
	const int total = static_cast<int>(criteria().size());
	if (selected.empty())
		for (int k = 1; k <= total; ++k)
			selected.push_back(k);

	int failed = 0;
	for (const int k : selected) {
		if (k < 1 || k > total) {
			std::cerr << "no criterion " << k << '\n';
			return 64;
		}
		const auto& c = criteria()[static_cast<std::size_t>(k - 1)];
		const auto t0 = std::chrono::steady_clock::now();
		verdict v;
		try {
			v = c.check();
		} catch (const std::exception& e) {
			v = {false, std::string("error: ") + e.what()};
		}
		const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		std::cout << (v.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << std::setfill('0') << k << std::setfill(' ')
		          << ' ' << c.label << ": " << v.detail << " [" << std::fixed << std::setprecision(1) << secs << " s]"
		          << std::defaultfloat << std::endl;
		if (!v.pass)
			++failed;
	}
	return failed == 0 ? 0 : 1;
}
