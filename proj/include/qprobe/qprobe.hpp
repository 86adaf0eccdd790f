#pragma once

#include "qprobe/attenuation.hpp"
#include "qprobe/estimation.hpp"
#include "qprobe/filters.hpp"
#include "qprobe/minimize.hpp"
#include "qprobe/montecarlo.hpp"
#include "qprobe/parallel.hpp"
#include "qprobe/quadrature.hpp"
#include "qprobe/spectral.hpp"
#include "qprobe/version.hpp"
