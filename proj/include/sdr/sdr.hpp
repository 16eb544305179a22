#pragma once

#include "sdr/error.hpp"
#include "sdr/evaluation.hpp"
#include "sdr/field.hpp"
#include "sdr/gradcheck.hpp"
#include "sdr/io.hpp"
#include "sdr/loss.hpp"
#include "sdr/mlp.hpp"
#include "sdr/problems.hpp"
#include "sdr/quadrature.hpp"
#include "sdr/rng.hpp"
#include "sdr/sampling.hpp"
#include "sdr/training.hpp"
