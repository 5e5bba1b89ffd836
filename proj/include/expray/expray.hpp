#pragma once

#include "expray/address.hpp"
#include "expray/common.hpp"
#include "expray/dyn_rays.hpp"
#include "expray/dynamics.hpp"
#include "expray/growth.hpp"
#include "expray/io.hpp"
#include "expray/param_rays.hpp"
#include "expray/render.hpp"
