#pragma once

#include "config.hpp"
#include "core.hpp"
#include "emission.hpp"
#include "errors.hpp"
#include "franck_condon.hpp"
#include "oracle.hpp"
#include "peaks.hpp"
#include "runner.hpp"
#include "scattering.hpp"
#include "spectrum.hpp"
