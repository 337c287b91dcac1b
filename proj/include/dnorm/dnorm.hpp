#pragma once

#include "algebra.hpp"
#include "generator.hpp"
#include "io.hpp"
#include "norm.hpp"
#include "oracles.hpp"
#include "random.hpp"
#include "sampler.hpp"
#include "simulate.hpp"
