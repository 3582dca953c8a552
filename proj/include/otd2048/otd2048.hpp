#pragma once

#include "otd2048/board.hpp"
#include "otd2048/engine.hpp"
#include "otd2048/errors.hpp"
#include "otd2048/evaluation.hpp"
#include "otd2048/learner.hpp"
#include "otd2048/network.hpp"
#include "otd2048/policy.hpp"
#include "otd2048/rng.hpp"
#include "otd2048/search.hpp"
#include "otd2048/tuple.hpp"
#include "otd2048/weight_io.hpp"
