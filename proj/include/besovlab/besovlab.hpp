#pragma once

#include "besovlab/core.hpp"
#include "besovlab/region.hpp"
#include "besovlab/fields.hpp"
#include "besovlab/quadrature.hpp"
#include "besovlab/shift.hpp"
#include "besovlab/kernels.hpp"
#include "besovlab/mollifiers.hpp"
#include "besovlab/jumps.hpp"
#include "besovlab/seminorms.hpp"
#include "besovlab/limits.hpp"
#include "besovlab/config.hpp"
#include "besovlab/experiment.hpp"
