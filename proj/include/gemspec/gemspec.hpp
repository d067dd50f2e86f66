#pragma once

// Umbrella header.

#include "gemspec/core/errors.hpp"
#include "gemspec/core/formulas.hpp"
#include "gemspec/core/physical_config.hpp"
#include "gemspec/core/units.hpp"
#include "gemspec/detector/camera.hpp"
#include "gemspec/detector/rng.hpp"
#include "gemspec/estimation/bootstrap.hpp"
#include "gemspec/estimation/fisher.hpp"
#include "gemspec/estimation/fit.hpp"
#include "gemspec/estimation/rayleigh.hpp"
#include "gemspec/io/config.hpp"
#include "gemspec/io/serialize.hpp"
#include "gemspec/optics/cloud.hpp"
#include "gemspec/optics/coherence.hpp"
#include "gemspec/optics/far_field.hpp"
#include "gemspec/optics/grid.hpp"
#include "gemspec/optics/mask.hpp"
#include "gemspec/optics/mask_image.hpp"
#include "gemspec/optics/scan.hpp"
#include "gemspec/app/commands.hpp"
#include "gemspec/app/pipeline.hpp"
