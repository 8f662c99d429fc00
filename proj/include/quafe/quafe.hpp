#pragma once

#include "quafe/bessel.hpp"
#include "quafe/circuit.hpp"
#include "quafe/config.hpp"
#include "quafe/constants.hpp"
#include "quafe/coupler.hpp"
#include "quafe/dsl.hpp"
#include "quafe/fock.hpp"
#include "quafe/interference.hpp"
#include "quafe/io.hpp"
#include "quafe/kinematics.hpp"
#include "quafe/noon.hpp"
#include "quafe/numeric.hpp"
#include "quafe/poisson.hpp"
#include "quafe/waveguide.hpp"
