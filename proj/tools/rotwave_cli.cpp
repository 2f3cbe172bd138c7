// rotwave command line: run experiments, calibrate the carrier, round-trip
// a register through the simulator and run the built-in oracle checks.

#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rotwave/rotwave.hpp"
#include "selftest.hpp"

namespace {

using namespace rotwave;

int code(exit_code c) { return static_cast<int>(c); }

key_value_config gather(const std::string& path, const std::vector<std::string>& overrides)
{
	key_value_config cfg = path.empty() ? key_value_config{} : load_config_or_manifest(path);
	for (const auto& o : overrides)
		cfg.apply_override(o);
	return cfg;
}

void print_decodes(const experiment_outcome& out, std::ostream& os)
{
	for (const auto& d : out.decodes) {
		os << d.group << ": n = " << d.expected << " (" << register_bits(d.expected, out.config.n_v) << ") -> ";
		if (d.decoded)
			os << *d.decoded << (d.ok() ? " ok" : " MISMATCH");
		else
			os << "ambiguous: " << d.error;
		os << '\n';
	}
}

int cmd_run(const std::string& path, const std::vector<std::string>& overrides, bool verbose)
{
	const auto cfg = resolve_config(gather(path, overrides));
	const auto out = run_experiment(cfg, verbose ? &std::cerr : nullptr);
	std::cout << "wrote " << out.files.size() + 1 << " files to " << out.output_dir << '\n';
	print_decodes(out, std::cout);
	return code(out.status());
}

int cmd_calibrate(const std::string& path, const std::vector<std::string>& overrides)
{
	const auto cfg = resolve_config(gather(path, overrides));
	const simulator sim(load_model(cfg), cfg.grid, cfg.bins, cfg.n_x, cfg.n_a, cfg.n_v);
	const double omega = resolve_carrier(cfg, sim);
	const double cm = units::to_wavenumber(omega);
	std::cout << std::setprecision(10) << "omega_cm = " << cm << '\n'
	          << "wavelength_nm = " << units::wavenumber_to_wavelength(cm) << '\n';
	if (const auto nominal = nominal_wavelength_nm(cfg.scenario))
		std::cout << "nominal_wavelength_nm = " << *nominal << '\n';
	for (const double tau : cfg.taus_ps)
		for (const auto& b : sim.bands(cfg.n_v, omega, tau))
			std::cout << "band tau=" << tau << "ps v=" << b.v << " center_cm=" << b.center_cm << " window=[" << b.lo_cm
			          << ", " << b.hi_cm << "] franck_condon=" << b.franck_condon << '\n';
	return 0;
}

int cmd_encode_decode(long long n, int bits, const std::string& path, const std::vector<std::string>& overrides)
{
	key_value_config user = gather(path, overrides);
	user.set("n_v", std::to_string(bits));
	user.set("registers", std::to_string(n));
	user.set("decode", "true");
	if (!user.has("output_dir"))
		user.set("output_dir", "rotwave-encode-decode");
	const auto cfg = resolve_config(user);
	const auto out = run_experiment(cfg);
	print_decodes(out, std::cout);
	return code(out.status());
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"rotwave: phase-encoded rotational wave packets read out by photoelectron spectra"};
	app.require_subcommand(1);
	app.set_version_flag("--version", std::string(rotwave::version_string));

	std::string config_path;
	std::vector<std::string> overrides;
	bool verbose = false;

	auto* run = app.add_subcommand("run", "run an experiment described by a configuration or manifest file");
	run->add_option("config", config_path, "key = value configuration, or manifest.json of an earlier run")
		->required();
	run->add_option("--set", overrides, "override a configuration key (key=value)");
	run->add_flag("-v,--verbose", verbose, "print progress to stderr");

	auto* calibrate = app.add_subcommand("calibrate", "print the calibrated carrier and band table");
	calibrate->add_option("config", config_path, "configuration file")->required();
	calibrate->add_option("--set", overrides, "override a configuration key (key=value)");

	long long n = 0;
	int bits = 2;
	auto* ed = app.add_subcommand("encode-decode", "store an integer, simulate, and read it back");
	ed->add_option("--n", n, "integer to store")->required();
	ed->add_option("--bits", bits, "number of vibrational levels (bits)")->required();
	ed->add_option("--config", config_path, "optional base configuration");
	ed->add_option("--set", overrides, "override a configuration key (key=value)");

	auto* st = app.add_subcommand("selftest", "run the built-in oracle checks");

	CLI11_PARSE(app, argc, argv);

	try {
		if (*run)
			return cmd_run(config_path, overrides, verbose);
		if (*calibrate)
			return cmd_calibrate(config_path, overrides);
		if (*ed)
			return cmd_encode_decode(n, bits, config_path, overrides);
		if (*st)
			return rotwave::selftest::run(std::cout) == 0 ? 0 : code(rotwave::exit_code::numerical_failure);
	} catch (const rotwave::config_error& e) {
		std::cerr << "configuration error: " << e.what() << '\n';
		return code(rotwave::exit_code::config_error);
	} catch (const rotwave::numerical_error& e) {
		std::cerr << "numerical failure: " << e.what() << '\n';
		return code(rotwave::exit_code::numerical_failure);
	} catch (const rotwave::decode_ambiguity& e) {
		std::cerr << "decode ambiguity in band " << e.band() << ": " << e.what() << '\n';
		return code(rotwave::exit_code::decode_ambiguity);
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << '\n';
		return code(rotwave::exit_code::config_error);
	}
	return 0;
}
