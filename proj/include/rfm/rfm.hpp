#pragma once

// Umbrella header: pulls in the whole public surface.

#include "rfm/activation.hpp"
#include "rfm/config.hpp"
#include "rfm/features.hpp"
#include "rfm/geometry.hpp"
#include "rfm/imex.hpp"
#include "rfm/lsq.hpp"
#include "rfm/metrics.hpp"
#include "rfm/model.hpp"
#include "rfm/pou.hpp"
#include "rfm/problems.hpp"
#include "rfm/rng.hpp"
#include "rfm/spectral.hpp"
#include "rfm/study.hpp"
#include "rfm/tableau.hpp"
