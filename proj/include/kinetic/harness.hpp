#pragma once

#include "kinetic/harness/config.hpp"
#include "kinetic/harness/emit.hpp"
#include "kinetic/harness/experiment.hpp"
