#pragma once

#include "stochar/error.hpp"
#include "stochar/process.hpp"
#include "stochar/model.hpp"
#include "stochar/characteristics.hpp"
#include "stochar/closedform.hpp"
#include "stochar/verify.hpp"
#include "stochar/csv.hpp"
