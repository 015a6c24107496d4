#pragma once

// Umbrella header.

#include "wrinkle/config.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/field.hpp"
#include "wrinkle/fitness.hpp"
#include "wrinkle/ga.hpp"
#include "wrinkle/gene.hpp"
#include "wrinkle/harness.hpp"
#include "wrinkle/image.hpp"
#include "wrinkle/image_io.hpp"
#include "wrinkle/oracle.hpp"
#include "wrinkle/parallel.hpp"
#include "wrinkle/perceptual.hpp"
#include "wrinkle/remote.hpp"
#include "wrinkle/render.hpp"
#include "wrinkle/rng.hpp"
#include "wrinkle/synthetic.hpp"
