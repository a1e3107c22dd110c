#pragma once

// Umbrella header for the numerical library (the driver is included separately).

#include "formheat/assembly.hpp"
#include "formheat/config.hpp"
#include "formheat/errors.hpp"
#include "formheat/evolution.hpp"
#include "formheat/exponents.hpp"
#include "formheat/geometry.hpp"
#include "formheat/linalg.hpp"
#include "formheat/parallel.hpp"
#include "formheat/quadrature.hpp"
#include "formheat/spectral.hpp"
#include "formheat/weights.hpp"
