#pragma once

#include "coopdqn/analysis.hpp"
#include "coopdqn/config.hpp"
#include "coopdqn/csv.hpp"
#include "coopdqn/error.hpp"
#include "coopdqn/experiment.hpp"
#include "coopdqn/exploration.hpp"
#include "coopdqn/game.hpp"
#include "coopdqn/qlearner.hpp"
#include "coopdqn/replay.hpp"
#include "coopdqn/rng.hpp"
#include "coopdqn/simulator.hpp"
#include "coopdqn/tinynet.hpp"
#include "coopdqn/topology.hpp"
