#pragma once

#include "config.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "field.hpp"
#include "fit.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "model_io.hpp"
#include "nelder_mead.hpp"
#include "predict.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "validity.hpp"
