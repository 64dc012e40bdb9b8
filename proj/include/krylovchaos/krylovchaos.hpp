#pragma once

#include "chaometrics.hpp"
#include "core.hpp"
#include "hamiltonians.hpp"
#include "krylov.hpp"
#include "perturbation.hpp"
#include "states.hpp"
