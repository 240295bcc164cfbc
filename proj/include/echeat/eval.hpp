#pragma once

#include "echeat/eval/emit.hpp"
#include "echeat/eval/metrics.hpp"
