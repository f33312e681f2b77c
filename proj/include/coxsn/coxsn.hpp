#pragma once

// Umbrella header.

#include "coxsn/errors.hpp"
#include "coxsn/rng.hpp"
#include "coxsn/quadrature.hpp"
#include "coxsn/random_measure.hpp"
#include "coxsn/cox_process.hpp"
#include "coxsn/arrival_law.hpp"
#include "coxsn/shot_noise.hpp"
#include "coxsn/predictor.hpp"
#include "coxsn/stats.hpp"
#include "coxsn/stat_verify.hpp"
#include "coxsn/config.hpp"
