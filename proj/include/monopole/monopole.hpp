#pragma once

#include "monopole/adiabatic.hpp"
#include "monopole/angular.hpp"
#include "monopole/eigensolver.hpp"
#include "monopole/error.hpp"
#include "monopole/fields.hpp"
#include "monopole/gauge.hpp"
#include "monopole/numerics.hpp"
#include "monopole/parallel.hpp"
#include "monopole/spectrum.hpp"
#include "monopole/types.hpp"
