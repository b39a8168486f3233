#pragma once

// Umbrella header for the analysis library. The HTTP binding lives separately
// in keydyn/service/http.hpp so that cpp-httplib is only pulled in where needed.

#include "keydyn/classifiers.hpp"
#include "keydyn/core.hpp"
#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/harness/csv.hpp"
#include "keydyn/harness/experiment.hpp"
#include "keydyn/harness/report.hpp"
#include "keydyn/harness/synthetic.hpp"
#include "keydyn/metrics.hpp"
#include "keydyn/preprocess.hpp"
#include "keydyn/service/serialization.hpp"
#include "keydyn/service/service.hpp"
#include "keydyn/service/store.hpp"
#include "keydyn/template.hpp"
