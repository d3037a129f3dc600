#pragma once

// Everything except the HTTP service (decree/service.hpp), which needs httplib
// and a thread library.

#include "decree/app_model.hpp"
#include "decree/compare.hpp"
#include "decree/diff.hpp"
#include "decree/difftest.hpp"
#include "decree/digest.hpp"
#include "decree/dsl.hpp"
#include "decree/error.hpp"
#include "decree/executor.hpp"
#include "decree/io.hpp"
#include "decree/json_util.hpp"
#include "decree/rational.hpp"
#include "decree/reference_arch.hpp"
#include "decree/repository.hpp"
#include "decree/script_runner.hpp"
#include "decree/techniques.hpp"
#include "decree/testgen.hpp"
#include "decree/unit_test.hpp"
