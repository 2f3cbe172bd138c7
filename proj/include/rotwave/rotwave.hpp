#pragma once

// Umbrella header.

#include "rotwave/angmom.hpp"
#include "rotwave/boundstates.hpp"
#include "rotwave/config.hpp"
#include "rotwave/error.hpp"
#include "rotwave/experiment.hpp"
#include "rotwave/fft.hpp"
#include "rotwave/grid.hpp"
#include "rotwave/potentials.hpp"
#include "rotwave/propagator.hpp"
#include "rotwave/quantumstate.hpp"
#include "rotwave/spectra.hpp"
#include "rotwave/units.hpp"
#include "rotwave/version.hpp"
