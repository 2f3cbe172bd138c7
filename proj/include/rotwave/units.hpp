#pragma once

// Atomic units are used everywhere inside the library. Laboratory units
// (cm^-1, nm, ps, fs, amu) are converted only at configuration boundaries.

namespace rotwave::units {

inline constexpr double pi = 3.14159265358979323846;

/// 1 hartree expressed in cm^-1.
inline constexpr double wavenumbers_per_hartree = 219474.6313632;
/// 1 atomic time unit expressed in femtoseconds.
inline constexpr double femtoseconds_per_au = 0.02418884326585747;
/// 1 unified atomic mass unit expressed in electron masses.
inline constexpr double electron_masses_per_amu = 1822.888486209;
/// Atomic mass of 7Li in amu.
inline constexpr double lithium7_mass_amu = 7.0160034366;

constexpr double from_wavenumber(double cm) { return cm / wavenumbers_per_hartree; }
constexpr double to_wavenumber(double hartree) { return hartree * wavenumbers_per_hartree; }

constexpr double from_fs(double fs) { return fs / femtoseconds_per_au; }
constexpr double from_ps(double ps) { return from_fs(ps * 1000.0); }
constexpr double to_fs(double au) { return au * femtoseconds_per_au; }
constexpr double to_ps(double au) { return to_fs(au) / 1000.0; }

/// Vacuum wavelength in nm to photon energy in cm^-1.
constexpr double wavelength_to_wavenumber(double nm) { return 1.0e7 / nm; }
constexpr double wavenumber_to_wavelength(double cm) { return 1.0e7 / cm; }

constexpr double from_amu(double amu) { return amu * electron_masses_per_amu; }

/// Reduced mass of the homonuclear 7Li2 molecule, in electron masses.
inline constexpr double li2_reduced_mass = lithium7_mass_amu * electron_masses_per_amu / 2.0;

} // namespace rotwave::units
