#pragma once

// Experiment orchestration: configuration resolution, carrier calibration,
// scheduling of per-(case, M) propagations on a worker pool, and the
// artifact writers (spectra tables, metadata, manifest, decode report).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotwave/boundstates.hpp"
#include "rotwave/config.hpp"
#include "rotwave/error.hpp"
#include "rotwave/potentials.hpp"
#include "rotwave/propagator.hpp"
#include "rotwave/quantumstate.hpp"
#include "rotwave/spectra.hpp"
#include "rotwave/units.hpp"
#include "rotwave/version.hpp"

namespace rotwave {

/// One simulated spectrum: a pulse, a set of quantum defects and an initial
/// register. Expands into 2 N_X + 1 propagations, one per M.
struct run_case {
	std::string name;
	double tau_ps = 2.5;
	std::string defects_name = "li2";
	quantum_defects defects = quantum_defects::li2();
	int n_v = 1;
	std::uint64_t reg = 0;
	doublet_components doublet = doublet_components::both;
};

inline const char* to_string(doublet_components d)
{
	switch (d) {
	case doublet_components::both: return "both";
	case doublet_components::lower: return "lower";
	case doublet_components::upper: return "upper";
	}
	return "?";
}

struct case_result {
	run_case input;
	spectrum_result spectrum;
	double initial_norm = 0.0;
	double final_norm = 0.0;
	double ion_population = 0.0;
};

/// Shared, read-only inputs of every propagation: curves, grids and the
/// precomputed rovibrational levels.
class simulator {
public:
	simulator(molecular_model model, radial_grid grid, energy_bins bins, int n_x, int n_a, int n_v_max)
		: model_(std::make_unique<molecular_model>(std::move(model))), grid_(grid), bins_(bins), n_x_(n_x), n_a_(n_a),
		  n_v_max_(n_v_max), levels_(*model_, grid)
	{
		if (n_x < 0 || n_a < 1 || std::abs(n_a - n_x) != 1)
			throw config_error("n_a: N_A must differ from N_X by one and be at least 1");
		if (n_v_max < 1)
			throw config_error("n_v: need at least one vibrational level");
		try {
			for (int n_e : {n_a - 1, n_a + 1})
				levels_.precompute(curve_label::e_state, n_e, n_v_max);
			for (int n = 0; n <= n_a + 3; ++n)
				levels_.precompute(curve_label::ion, n, n_v_max);
		} catch (const std::runtime_error& e) {
			throw config_error(std::string("n_v: ") + e.what());
		}
	}

	const molecular_model& model() const { return *model_; }
	const radial_grid& grid() const { return grid_; }
	const energy_bins& bins() const { return bins_; }
	const level_table& levels() const { return levels_; }
	int n_x() const { return n_x_; }
	int n_a() const { return n_a_; }

	/// Photon energy (hartree) that puts the v+ = v_E = 0, N+ = N_E = N_A - 1
	/// peak at `target_cm`. Fails when the target or any of the n_v bands
	/// falls outside the energy grid.
	double calibrate_carrier(double target_cm, int n_v) const
	{
		if (!bins_.contains_cm(target_cm)) {
			std::ostringstream msg;
			msg << "target_peak_cm: " << target_cm << " cm^-1 lies outside the energy grid [" << bins_.min_cm << ", "
			    << bins_.max_cm << "]";
			throw config_error(msg.str());
		}
		const int n_ref = n_a_ - 1;
		const double omega = levels_.level(curve_label::ion, 0, n_ref).energy
			- levels_.level(curve_label::e_state, 0, n_ref).energy + units::from_wavenumber(target_cm);
		check_bands(omega, n_v, "target_peak_cm");
		return omega;
	}

	/// Throws when a band centre of v = 0 .. n_v-1 is closed or off the grid.
	void check_bands(double omega, int n_v, const std::string& key) const
	{
		if (n_v > n_v_max_)
			throw config_error("n_v: exceeds the number of precomputed levels");
		for (int v = 0; v < n_v; ++v)
			for (int n_e : {n_a_ - 1, n_a_ + 1}) {
				const auto eps = predict_peak(levels_.level(curve_label::e_state, v, n_e),
				                              levels_.level(curve_label::ion, v, n_e), omega);
				if (!eps || !bins_.contains_cm(*eps)) {
					std::ostringstream msg;
					msg << key << ": no carrier placing all " << n_v << " vibrational bands inside the energy grid (band v = "
					    << v << ", N_E = " << n_e << " lands at "
					    << (eps ? std::to_string(*eps) + " cm^-1" : std::string("a closed channel")) << ")";
					throw config_error(msg.str());
				}
			}
	}

	std::vector<band> bands(int n_v, double omega, double tau_ps) const
	{
		const pulse_params pulse{0.0, omega, units::from_ps(tau_ps)};
		return make_band_table(levels_, n_a_, n_v, omega, units::to_wavenumber(pulse.spectral_fwhm()));
	}

	channel_layout layout(int big_m) const { return make_layout(n_a_, big_m, bins_); }

	wavepacket_state initial_state(const run_case& c, int big_m) const
	{
		return assemble_initial(encode(static_cast<std::int64_t>(c.reg), c.n_v), levels_, layout(big_m), n_a_, n_x_,
		                        c.doublet);
	}

	/// Propagates the projection M of one case to the end of the pulse.
	wavepacket_state propagate(const run_case& c, int big_m, double omega, double e0,
	                           const propagation_config& config, std::ostream* log = nullptr) const
	{
		const auto lay = layout(big_m);
		const propagator prop(*model_, grid_, lay, c.defects, omega);
		auto state = initial_state(c, big_m);
		const pulse_params pulse{e0, omega, units::from_ps(c.tau_ps)};
		prop.propagate(state, pulse, config, log);
		return state;
	}

	/// Runs every (case, M) propagation on `workers` threads. Results are
	/// merged in case order, independent of scheduling.
	std::vector<case_result> run(const std::vector<run_case>& cases, double omega, double e0,
	                             const propagation_config& config, int workers = 1,
	                             std::ostream* log = nullptr) const
	{
		struct slot {
			projection_spectrum part;
			double initial_norm = 0.0;
			double final_norm = 0.0;
			double ion = 0.0;
		};
		const int n_m = 2 * n_x_ + 1;
		const std::size_t n_tasks = cases.size() * static_cast<std::size_t>(n_m);
		std::vector<slot> slots(n_tasks);
		std::atomic<std::size_t> next{0};
		std::mutex log_mutex;
		std::exception_ptr failure;
		std::mutex failure_mutex;

		auto worker = [&] {
			for (;;) {
				const std::size_t t = next.fetch_add(1);
				if (t >= n_tasks)
					return;
				{
					std::lock_guard lock(failure_mutex);
					if (failure)
						return;
				}
				const auto& c = cases[t / static_cast<std::size_t>(n_m)];
				const int big_m = static_cast<int>(t % static_cast<std::size_t>(n_m)) - n_x_;
				try {
					std::ostringstream buffer;
					auto state = initial_state(c, big_m);
					slots[t].initial_norm = state.norm();
					const auto lay = layout(big_m);
					const propagator prop(*model_, grid_, lay, c.defects, omega);
					const pulse_params pulse{e0, omega, units::from_ps(c.tau_ps)};
					prop.propagate(state, pulse, config, log != nullptr ? &buffer : nullptr);
					slots[t].final_norm = state.norm();
					slots[t].ion = state.ion_population();
					slots[t].part = project(state, bins_);
					if (log != nullptr) {
						std::lock_guard lock(log_mutex);
						*log << "[" << c.name << " M=" << big_m << "]\n" << buffer.str();
						log->flush();
					}
				} catch (...) {
					std::lock_guard lock(failure_mutex);
					if (!failure)
						failure = std::current_exception();
				}
			}
		};

		const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(n_tasks)));
		if (n_threads == 1) {
			worker();
		} else {
			std::vector<std::thread> pool;
			for (int i = 0; i < n_threads; ++i)
				pool.emplace_back(worker);
			for (auto& th : pool)
				th.join();
		}
		if (failure)
			std::rethrow_exception(failure);

		std::vector<case_result> out;
		out.reserve(cases.size());
		for (std::size_t i = 0; i < cases.size(); ++i) {
			case_result r;
			r.input = cases[i];
			std::vector<projection_spectrum> parts;
			for (int k = 0; k < n_m; ++k) {
				auto& s = slots[i * static_cast<std::size_t>(n_m) + static_cast<std::size_t>(k)];
				r.initial_norm += s.initial_norm;
				r.final_norm += s.final_norm;
				r.ion_population += s.ion;
				parts.push_back(std::move(s.part));
			}
			r.spectrum = combine_projections(parts, n_x_, bins_);
			out.push_back(std::move(r));
		}
		return out;
	}

private:
	std::unique_ptr<molecular_model> model_;
	radial_grid grid_;
	energy_bins bins_;
	int n_x_;
	int n_a_;
	int n_v_max_;
	level_table levels_;
};

// ---------------------------------------------------------------------------
// Configuration

/// Nominal laboratory wavelengths of the published scenarios. With the
/// bundled curves the carrier is recalibrated; these are kept for reference.
inline std::optional<double> nominal_wavelength_nm(const std::string& scenario)
{
	if (scenario == "fig2" || scenario == "fig3")
		return 705.0;
	if (scenario == "fig4")
		return 699.8;
	if (scenario == "fig5")
		return 699.6;
	return std::nullopt;
}

/// Every configuration key with its default value.
inline key_value_config default_config()
{
	key_value_config c;
	c.set("scenario", "custom");
	c.set("curves", "model");
	c.set("reduced_mass_amu", "3.5080017183");
	c.set("n_x", "1");
	c.set("n_a", "2");
	c.set("n_v", "2");
	c.set("registers", "0");
	c.set("doublet", "both");
	c.set("tau_ps", "2.5");
	c.set("target_peak_cm", "55");
	c.set("e0_au", "1e-4");
	c.set("defects", "li2");
	c.set("mu_sigma", "0.001");
	c.set("mu_pi", "-0.287");
	c.set("eps_min_cm", "10");
	c.set("eps_max_cm", "190");
	c.set("eps_count", "150");
	c.set("dt_fs", "4");
	c.set("grid_r_min", "3.5");
	c.set("grid_r_max", "14.0");
	c.set("grid_points", "128");
	c.set("workers", "1");
	c.set("log_every", "0");
	c.set("decode", "true");
	c.set("decode_guard", "0.1");
	c.set("write_angular", "false");
	return c;
}

inline const std::set<std::string>& known_keys()
{
	static const std::set<std::string> keys = [] {
		std::set<std::string> k;
		const key_value_config defaults = default_config();
		for (const auto& [key, value] : defaults.entries())
			k.insert(key);
		k.insert({"e_state_file", "ion_file", "wavelength_nm", "omega_cm", "output_dir"});
		return k;
	}();
	return keys;
}

/// Preset values of a named scenario, applied before the user's keys.
inline key_value_config scenario_preset(const std::string& scenario)
{
	key_value_config p;
	if (scenario == "fig2") {
		p.set("tau_ps", "15, 2.5");
		p.set("defects", "li2, isotropic");
		p.set("doublet", "lower, upper");
		p.set("n_v", "1");
		p.set("registers", "0");
		p.set("decode", "false");
	} else if (scenario == "fig3") {
		p.set("tau_ps", "2.5, 15");
		p.set("defects", "li2, isotropic");
		p.set("doublet", "both");
		p.set("n_v", "1");
		p.set("registers", "0, 1");
		p.set("decode", "false");
	} else if (scenario == "fig4") {
		p.set("tau_ps", "2.5");
		p.set("n_v", "2");
		p.set("registers", "0, 1, 2, 3");
		p.set("target_peak_cm", "80");
	} else if (scenario == "fig5") {
		p.set("tau_ps", "2.5");
		p.set("n_v", "5");
		p.set("registers", "0, 1, 10, 31");
		p.set("target_peak_cm", "160");
	} else if (scenario != "custom") {
		throw config_error("scenario: unknown scenario '" + scenario + "' (expected fig2, fig3, fig4, fig5 or custom)");
	}
	return p;
}

struct experiment_config {
	key_value_config resolved;
	std::string scenario;
	std::string curves;
	int n_x = 1;
	int n_a = 2;
	int n_v = 2;
	std::vector<std::uint64_t> registers;
	std::vector<doublet_components> doublets;
	std::vector<double> taus_ps;
	std::vector<std::pair<std::string, quantum_defects>> defect_sets;
	std::optional<double> omega_cm;
	double target_peak_cm = 55.0;
	double e0 = 1e-4;
	energy_bins bins;
	radial_grid grid;
	propagation_config propagation;
	std::string output_dir;
	int workers = 1;
	bool decode = true;
	double decode_guard = 0.1;
	bool write_angular = false;
};

/// Defaults, then the scenario preset, then the user's keys.
inline experiment_config resolve_config(const key_value_config& user)
{
	user.check_keys(known_keys());
	key_value_config cfg = default_config();
	const std::string scenario = user.get_string("scenario", "custom");
	const key_value_config preset = scenario_preset(scenario);
	for (const auto& [k, v] : preset.entries())
		cfg.set(k, v);
	for (const auto& [k, v] : user.entries())
		cfg.set(k, v);
	if (!cfg.has("output_dir"))
		cfg.set("output_dir", "rotwave-" + scenario);

	experiment_config out;
	out.scenario = scenario;
	out.curves = cfg.get_string("curves");
	if (out.curves != "model" && out.curves != "tabulated")
		throw config_error("curves: expected 'model' or 'tabulated'");
	if (out.curves == "tabulated") {
		cfg.get_string("e_state_file");
		cfg.get_string("ion_file");
	}
	if (!(cfg.get_double("reduced_mass_amu") > 0.0))
		throw config_error("reduced_mass_amu: must be positive");

	out.n_x = static_cast<int>(cfg.get_int("n_x"));
	out.n_a = static_cast<int>(cfg.get_int("n_a"));
	if (out.n_x < 0)
		throw config_error("n_x: must be non-negative");
	if (out.n_a < 1 || std::abs(out.n_a - out.n_x) != 1)
		throw config_error("n_a: must differ from n_x by one and be at least 1");
	out.n_v = static_cast<int>(cfg.get_int("n_v"));
	if (out.n_v < 1 || out.n_v > 62)
		throw config_error("n_v: must be in [1, 62]");
	for (const long long n : cfg.get_int_list("registers")) {
		if (n < 0 || static_cast<std::uint64_t>(n) >= phase_register::capacity(out.n_v))
			throw config_error("registers: value " + std::to_string(n) + " does not fit in n_v = "
			                   + std::to_string(out.n_v) + " levels");
		out.registers.push_back(static_cast<std::uint64_t>(n));
	}
	for (const auto& d : cfg.get_string_list("doublet")) {
		if (d == "both")
			out.doublets.push_back(doublet_components::both);
		else if (d == "lower")
			out.doublets.push_back(doublet_components::lower);
		else if (d == "upper")
			out.doublets.push_back(doublet_components::upper);
		else
			throw config_error("doublet: expected both, lower or upper, got '" + d + "'");
	}
	for (const double t : cfg.get_double_list("tau_ps")) {
		if (!(t > 0.0))
			throw config_error("tau_ps: pulse durations must be positive");
		out.taus_ps.push_back(t);
	}
	const double mu_sigma = cfg.get_double("mu_sigma");
	const double mu_pi = cfg.get_double("mu_pi");
	for (const auto& d : cfg.get_string_list("defects")) {
		if (d == "li2")
			out.defect_sets.emplace_back(d, quantum_defects::li2());
		else if (d == "isotropic")
			out.defect_sets.emplace_back(d, quantum_defects::isotropic(mu_sigma));
		else if (d == "custom")
			out.defect_sets.emplace_back(d, quantum_defects{mu_sigma, mu_pi});
		else
			throw config_error("defects: expected li2, isotropic or custom, got '" + d + "'");
	}

	if (cfg.has("wavelength_nm") && cfg.has("omega_cm"))
		throw config_error("wavelength_nm: wavelength_nm and omega_cm are mutually exclusive");
	if (cfg.has("wavelength_nm")) {
		const double nm = cfg.get_double("wavelength_nm");
		if (!(nm > 0.0))
			throw config_error("wavelength_nm: must be positive");
		out.omega_cm = units::wavelength_to_wavenumber(nm);
	} else if (cfg.has("omega_cm")) {
		out.omega_cm = cfg.get_double("omega_cm");
		if (!(*out.omega_cm > 0.0))
			throw config_error("omega_cm: must be positive");
	}
	out.target_peak_cm = cfg.get_double("target_peak_cm");

	out.e0 = cfg.get_double("e0_au");
	if (!(out.e0 >= 0.0))
		throw config_error("e0_au: must be non-negative");
	out.bins = {cfg.get_double("eps_min_cm"), cfg.get_double("eps_max_cm"), static_cast<int>(cfg.get_int("eps_count"))};
	if (!(out.bins.max_cm > out.bins.min_cm) || out.bins.count < 2)
		throw config_error("eps_count: the energy grid needs eps_max_cm > eps_min_cm and at least 2 bins");
	out.grid = {cfg.get_double("grid_r_min"), cfg.get_double("grid_r_max"),
	            static_cast<std::size_t>(std::max<long long>(0, cfg.get_int("grid_points")))};
	if (!(out.grid.r_max > out.grid.r_min) || out.grid.r_min <= 0.0)
		throw config_error("grid_r_max: the radial grid needs 0 < grid_r_min < grid_r_max");
	if (!out.grid.is_power_of_two() || out.grid.size < 4)
		throw config_error("grid_points: must be a power of two and at least 4");
	out.propagation.dt = units::from_fs(cfg.get_double("dt_fs"));
	if (!(out.propagation.dt > 0.0))
		throw config_error("dt_fs: must be positive");
	out.propagation.log_every = static_cast<int>(cfg.get_int("log_every"));
	out.workers = static_cast<int>(cfg.get_int("workers"));
	if (out.workers < 1)
		throw config_error("workers: must be at least 1");
	out.decode = cfg.get_bool("decode", true);
	out.decode_guard = cfg.get_double("decode_guard");
	if (!(out.decode_guard >= 0.0 && out.decode_guard < 0.5))
		throw config_error("decode_guard: must be in [0, 0.5)");
	out.write_angular = cfg.get_bool("write_angular", false);
	out.output_dir = cfg.get_string("output_dir");
	out.resolved = cfg;
	return out;
}

inline molecular_model load_model(const experiment_config& cfg)
{
	if (cfg.curves == "model")
		return load_model_li2();
	molecular_model m{potential_curve::morse(curve_label::e_state, {}), potential_curve::morse(curve_label::ion, {}),
	                  units::from_amu(cfg.resolved.get_double("reduced_mass_amu")), "tabulated curves"};
	try {
		m.e_state = load_tabulated(cfg.resolved.get_string("e_state_file"), curve_label::e_state);
	} catch (const std::exception& e) {
		throw config_error(std::string("e_state_file: ") + e.what());
	}
	try {
		m.ion = load_tabulated(cfg.resolved.get_string("ion_file"), curve_label::ion);
	} catch (const std::exception& e) {
		throw config_error(std::string("ion_file: ") + e.what());
	}
	for (const auto* curve : {&m.e_state, &m.ion})
		if (curve->domain_min() > cfg.grid.r_min || curve->domain_max() < cfg.grid.r_max)
			throw config_error(std::string(curve->label() == curve_label::ion ? "ion_file" : "e_state_file")
			                   + ": tabulated curve does not cover the radial grid");
	return m;
}

inline std::string register_bits(std::uint64_t n, int n_v)
{
	std::string s;
	for (int v = n_v - 1; v >= 0; --v)
		s += ((n >> v) & 1u) != 0 ? '1' : '0';
	return s;
}

inline std::string format_number(double x)
{
	std::ostringstream os;
	os << x;
	return os.str();
}

inline std::string case_name(const run_case& c)
{
	std::ostringstream os;
	os << "tau" << format_number(c.tau_ps) << "ps_" << c.defects_name << '_' << to_string(c.doublet) << "_nv" << c.n_v
	   << "_n" << c.reg;
	return os.str();
}

/// Cartesian product tau x defects x doublet x register. When decoding, the
/// all-zero and all-ones calibration registers are added for every
/// (tau, defects) group.
inline std::vector<run_case> expand_cases(const experiment_config& cfg)
{
	std::vector<std::uint64_t> regs = cfg.registers;
	const std::uint64_t all_ones = phase_register::capacity(cfg.n_v) - 1;
	if (cfg.decode) {
		regs.push_back(0);
		regs.push_back(all_ones);
	}
	std::sort(regs.begin(), regs.end());
	regs.erase(std::unique(regs.begin(), regs.end()), regs.end());

	std::vector<run_case> out;
	for (const double tau : cfg.taus_ps)
		for (const auto& [dname, defects] : cfg.defect_sets)
			for (const auto doublet : cfg.doublets)
				for (const auto n : regs) {
					run_case c{"", tau, dname, defects, cfg.n_v, n, doublet};
					c.name = case_name(c);
					out.push_back(c);
				}
	return out;
}

/// FNV-1a over the bytes of the grid, the bins and the curve samples, so
/// that two runs can be checked for identical numerical setups.
inline std::string setup_hash(const simulator& sim)
{
	std::uint64_t h = 1469598103934665603ULL;
	auto mix = [&h](double x) {
		unsigned char bytes[sizeof(double)];
		std::memcpy(bytes, &x, sizeof(double));
		for (unsigned char b : bytes) {
			h ^= b;
			h *= 1099511628211ULL;
		}
	};
	for (std::size_t i = 0; i < sim.grid().size; ++i) {
		const double r = sim.grid().point(i);
		mix(r);
		mix(sim.model().e_state(r));
		mix(sim.model().ion(r));
	}
	for (int j = 0; j < sim.bins().count; ++j)
		mix(sim.bins().center_cm(j));
	mix(sim.model().reduced_mass);
	std::ostringstream os;
	os << std::hex << std::setw(16) << std::setfill('0') << h;
	return os.str();
}

struct decode_record {
	std::string group;
	std::uint64_t expected = 0;
	std::optional<std::uint64_t> decoded;
	std::string error;
	std::optional<int> ambiguous_band;
	std::vector<band_reading> bands;

	bool ok() const { return decoded && *decoded == expected; }
};

struct experiment_outcome {
	experiment_config config;
	double omega = 0.0;
	std::string output_dir;
	std::vector<case_result> results;
	std::vector<decode_record> decodes;
	std::vector<std::string> files;

	exit_code status() const
	{
		for (const auto& d : decodes)
			if (!d.ok())
				return exit_code::decode_ambiguity;
		return exit_code::success;
	}
};

/// Output directory of a run: relative paths live under $ROTWAVE_OUTPUT_ROOT
/// when that variable is set.
inline std::filesystem::path output_path(const std::string& dir)
{
	std::filesystem::path p(dir);
	if (p.is_relative())
		if (const char* root = std::getenv("ROTWAVE_OUTPUT_ROOT"); root != nullptr && *root != '\0')
			p = std::filesystem::path(root) / p;
	return p;
}

inline double resolve_carrier(const experiment_config& cfg, const simulator& sim)
{
	if (cfg.omega_cm) {
		const double omega = units::from_wavenumber(*cfg.omega_cm);
		sim.check_bands(omega, cfg.n_v, cfg.resolved.has("wavelength_nm") ? "wavelength_nm" : "omega_cm");
		return omega;
	}
	return sim.calibrate_carrier(cfg.target_peak_cm, cfg.n_v);
}

namespace detail {

inline void write_spectrum_table(const std::filesystem::path& path, const case_result& r,
                                 const spectrum_result* reference, const std::vector<band>* bands)
{
	std::ofstream os(path);
	if (!os)
		throw std::runtime_error("cannot write '" + path.string() + "'");
	os << std::setprecision(10);
	const auto& sp = r.spectrum;
	const auto channels = sp.rotational_channels();
	os << "eps_cm\tP_total";
	for (int n : channels)
		os << "\tP_Nplus" << n;
	std::optional<Eigen::VectorXd> s;
	std::optional<renormalized_signal> s_f;
	if (reference != nullptr) {
		s = signal_difference(sp, *reference);
		os << "\tS";
		if (bands != nullptr) {
			s_f = fc_renormalize(*s, sp.bins, *bands);
			os << "\tS_over_F\tband";
		}
	}
	os << '\n';
	std::map<int, Eigen::VectorXd> per_n;
	for (int n : channels)
		per_n.emplace(n, sp.rotational_channel(n));
	for (int j = 0; j < sp.bins.count; ++j) {
		os << sp.bins.center_cm(j) << '\t' << sp.total[j];
		for (int n : channels)
			os << '\t' << per_n.at(n)[j];
		if (s) {
			os << '\t' << (*s)[j];
			if (s_f) {
				const auto b = band_of(*bands, sp.bins.center_cm(j));
				os << '\t' << s_f->values[j] << '\t' << (b ? std::to_string((*bands)[*b].v) : std::string("-"));
			}
		}
		os << '\n';
	}
}

inline void write_angular_table(const std::filesystem::path& path, const spectrum_result& sp)
{
	std::ofstream os(path);
	if (!os)
		throw std::runtime_error("cannot write '" + path.string() + "'");
	os << std::setprecision(10);
	os << "# rows: eps_cm then P(eps, k) for each direction; directions listed in the header as theta:phi (rad)\n";
	os << "eps_cm";
	for (const auto& d : angular_grid())
		os << '\t' << d.theta << ':' << d.phi;
	os << '\n';
	for (int j = 0; j < sp.bins.count; ++j) {
		os << sp.bins.center_cm(j);
		for (Eigen::Index d = 0; d < sp.angular.cols(); ++d)
			os << '\t' << sp.angular(j, d);
		os << '\n';
	}
}

} // namespace detail

/// Full pipeline: precompute, propagate every case, write artifacts, decode.
inline experiment_outcome run_experiment(const experiment_config& cfg, std::ostream* log = nullptr)
{
	experiment_outcome out;
	out.config = cfg;
	const simulator sim(load_model(cfg), cfg.grid, cfg.bins, cfg.n_x, cfg.n_a, cfg.n_v);
	out.omega = resolve_carrier(cfg, sim);
	const auto cases = expand_cases(cfg);
	if (log != nullptr)
		*log << "carrier " << units::to_wavenumber(out.omega) << " cm^-1, " << cases.size() << " cases x "
		     << 2 * cfg.n_x + 1 << " projections\n";
	try {
		out.results = sim.run(cases, out.omega, cfg.e0, cfg.propagation, cfg.workers, log);
	} catch (const numerical_error& e) {
		throw numerical_error(std::string("e0_au/dt_fs: ") + e.what());
	}

	const auto dir = output_path(cfg.output_dir);
	std::filesystem::create_directories(dir);
	out.output_dir = dir.string();

	// Group by (tau, defects, doublet); the register-0 run is the reference.
	using group_key = std::tuple<double, std::string, int>;
	std::map<group_key, std::map<std::uint64_t, const case_result*>> groups;
	for (const auto& r : out.results)
		groups[{r.input.tau_ps, r.input.defects_name, static_cast<int>(r.input.doublet)}][r.input.reg] = &r;

	const std::string hash = setup_hash(sim);
	nlohmann::ordered_json manifest;
	manifest["program"] = "rotwave";
	manifest["version"] = version_string;
	manifest["scenario"] = cfg.scenario;
	manifest["setup_hash"] = hash;
	manifest["omega_cm"] = units::to_wavenumber(out.omega);
	manifest["wavelength_nm"] = units::wavenumber_to_wavelength(units::to_wavenumber(out.omega));
	if (const auto nominal = nominal_wavelength_nm(cfg.scenario))
		manifest["nominal_wavelength_nm"] = *nominal;
	manifest["carrier_source"] = cfg.omega_cm ? "configured" : "calibrated";
	nlohmann::ordered_json config_json;
	for (const auto& [k, v] : cfg.resolved.entries())
		config_json[k] = v;
	manifest["config"] = config_json;

	for (const auto& [key, members] : groups) {
		const auto& [tau, dname, doublet] = key;
		const auto ref_it = members.find(0);
		const spectrum_result* reference = ref_it != members.end() ? &ref_it->second->spectrum : nullptr;
		std::optional<std::vector<band>> bands;
		if (static_cast<doublet_components>(doublet) == doublet_components::both)
			bands = sim.bands(cfg.n_v, out.omega, tau);

		for (const auto& [reg, r] : members) {
			const auto table = dir / (r->input.name + ".tsv");
			detail::write_spectrum_table(table, *r, reference, bands ? &*bands : nullptr);
			out.files.push_back(table.filename().string());
			if (cfg.write_angular) {
				const auto ang = dir / (r->input.name + "_angular.tsv");
				detail::write_angular_table(ang, r->spectrum);
				out.files.push_back(ang.filename().string());
			}
			nlohmann::ordered_json meta;
			meta["case"] = r->input.name;
			meta["version"] = version_string;
			meta["setup_hash"] = hash;
			meta["tau_ps"] = r->input.tau_ps;
			meta["e0_au"] = cfg.e0;
			meta["omega_cm"] = units::to_wavenumber(out.omega);
			meta["defects"] = {{"name", r->input.defects_name}, {"mu_sigma", r->input.defects.sigma},
			                   {"mu_pi", r->input.defects.pi}};
			meta["doublet"] = to_string(r->input.doublet);
			meta["n_v"] = r->input.n_v;
			meta["register"] = r->input.reg;
			meta["register_bits"] = register_bits(r->input.reg, r->input.n_v);
			meta["initial_norm"] = r->initial_norm;
			meta["final_norm"] = r->final_norm;
			meta["ion_population"] = r->ion_population;
			meta["config"] = config_json;
			const auto meta_path = dir / (r->input.name + ".json");
			std::ofstream(meta_path) << meta.dump(2) << '\n';
			out.files.push_back(meta_path.filename().string());
		}

		if (!cfg.decode || !bands)
			continue;
		const std::uint64_t all_ones = phase_register::capacity(cfg.n_v) - 1;
		const decode_calibration cal{members.at(0)->spectrum, members.at(all_ones)->spectrum, cfg.decode_guard};
		for (const auto n : cfg.registers) {
			decode_record rec;
			rec.group = "tau" + format_number(tau) + "ps_" + dname;
			rec.expected = n;
			try {
				const auto d = decode(members.at(n)->spectrum, *bands, cal);
				rec.decoded = d.value;
				rec.bands = d.bands;
			} catch (const decode_ambiguity& e) {
				rec.error = e.what();
				rec.ambiguous_band = e.band();
			}
			out.decodes.push_back(rec);
		}
	}

	if (!out.decodes.empty()) {
		const auto report_path = dir / "decode_report.txt";
		std::ofstream rep(report_path);
		rep << std::setprecision(6);
		rep << "# group\texpected\tbits\tdecoded\tstatus\tscores(v=0..n_v-1)\n";
		nlohmann::ordered_json dj = nlohmann::ordered_json::array();
		for (const auto& d : out.decodes) {
			rep << d.group << '\t' << d.expected << '\t' << register_bits(d.expected, cfg.n_v) << '\t'
			    << (d.decoded ? std::to_string(*d.decoded) : std::string("-")) << '\t'
			    << (d.ok() ? "ok" : d.decoded ? "mismatch" : "ambiguous") << '\t';
			for (std::size_t i = 0; i < d.bands.size(); ++i)
				rep << (i ? "," : "") << d.bands[i].score;
			if (!d.error.empty())
				rep << '\t' << d.error;
			rep << '\n';
			nlohmann::ordered_json e;
			e["group"] = d.group;
			e["expected"] = d.expected;
			e["decoded"] = d.decoded ? nlohmann::ordered_json(*d.decoded) : nlohmann::ordered_json(nullptr);
			e["status"] = d.ok() ? "ok" : d.decoded ? "mismatch" : "ambiguous";
			if (d.ambiguous_band)
				e["ambiguous_band"] = *d.ambiguous_band;
			nlohmann::ordered_json scores = nlohmann::ordered_json::array();
			for (const auto& b : d.bands)
				scores.push_back({{"v", b.v}, {"score", b.score}, {"intensity_ratio", b.intensity_ratio},
				                  {"contrast", b.contrast}, {"bit", b.bit}});
			e["bands"] = scores;
			dj.push_back(e);
		}
		manifest["decode"] = dj;
		out.files.push_back(report_path.filename().string());
	}

	manifest["files"] = out.files;
	std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
	return out;
}

/// Reads either a key = value configuration or a manifest written by a
/// previous run (its "config" object).
inline key_value_config load_config_or_manifest(const std::string& path)
{
	if (std::filesystem::path(path).extension() == ".json") {
		std::ifstream in(path);
		if (!in)
			throw config_error("cannot open manifest '" + path + "'");
		nlohmann::json j;
		try {
			in >> j;
		} catch (const std::exception& e) {
			throw config_error("manifest '" + path + "': " + e.what());
		}
		if (!j.contains("config") || !j["config"].is_object())
			throw config_error("manifest '" + path + "' has no config object");
		key_value_config cfg;
		for (const auto& [k, v] : j["config"].items())
			cfg.set(k, v.get<std::string>());
		return cfg;
	}
	return key_value_config::load(path);
}

} // namespace rotwave
