#pragma once

#include "nvmark/bath.hpp"
#include "nvmark/error.hpp"
#include "nvmark/hilbert.hpp"
#include "nvmark/io.hpp"
#include "nvmark/lindblad.hpp"
#include "nvmark/measure.hpp"
#include "nvmark/phase_space.hpp"
#include "nvmark/quadrature.hpp"
#include "nvmark/scenario.hpp"
#include "nvmark/states.hpp"
