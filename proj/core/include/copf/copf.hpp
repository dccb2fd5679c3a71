#pragma once

// Umbrella header.

#include "copf/accounting.hpp"
#include "copf/carbon_flow.hpp"
#include "copf/case_io.hpp"
#include "copf/dispatch.hpp"
#include "copf/errors.hpp"
#include "copf/model.hpp"
#include "copf/power_flow.hpp"
#include "copf/result_io.hpp"
#include "copf/storage_carbon.hpp"
#include "copf/units.hpp"
#include "copf/validation.hpp"
#include "copf/version.hpp"
