#pragma once

#include "gfflab/analysis.hpp"
#include "gfflab/error.hpp"
#include "gfflab/green.hpp"
#include "gfflab/lattice.hpp"
#include "gfflab/markov.hpp"
#include "gfflab/moments.hpp"
#include "gfflab/rng.hpp"
#include "gfflab/sampler.hpp"
#include "gfflab/stats.hpp"

namespace gfflab {
inline constexpr const char *kVersion = "0.1.0";
}
