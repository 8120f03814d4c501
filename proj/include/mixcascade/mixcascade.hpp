#pragma once

#include "mixcascade/analysis.hpp"
#include "mixcascade/cascade.hpp"
#include "mixcascade/commands.hpp"
#include "mixcascade/config.hpp"
#include "mixcascade/error.hpp"
#include "mixcascade/estimation.hpp"
#include "mixcascade/generators.hpp"
#include "mixcascade/lambert_w.hpp"
#include "mixcascade/parallel.hpp"
#include "mixcascade/rng.hpp"
#include "mixcascade/spectrum.hpp"
#include "mixcascade/summation.hpp"
#include "mixcascade/svg.hpp"
