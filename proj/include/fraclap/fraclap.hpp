#pragma once

#include "barriers.hpp"
#include "blowup.hpp"
#include "errors.hpp"
#include "extension.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "operator.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "solver.hpp"
#include "toeplitz.hpp"
#include "version.hpp"
