#pragma once

#include "kinetic/bounds.hpp"
#include "kinetic/coupling.hpp"
#include "kinetic/ensemble.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/geometry.hpp"
#include "kinetic/kernel.hpp"
#include "kinetic/transport.hpp"
#include "kinetic/velocity.hpp"
