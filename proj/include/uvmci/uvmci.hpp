// Umbrella header for the UV turbulent multiple-scattering channel library.
#pragma once

#include "uvmci/atmosphere.hpp"
#include "uvmci/config.hpp"
#include "uvmci/fading_pdf.hpp"
#include "uvmci/geometry.hpp"
#include "uvmci/mci.hpp"
#include "uvmci/measurements.hpp"
#include "uvmci/random.hpp"
#include "uvmci/report.hpp"
#include "uvmci/sampler.hpp"
#include "uvmci/turbulence.hpp"
