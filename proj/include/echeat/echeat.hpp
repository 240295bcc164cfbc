#pragma once

#include "echeat/agent/agent.hpp"
#include "echeat/dataset/dataset.hpp"
#include "echeat/encoder/encoder.hpp"
#include "echeat/eval.hpp"
#include "echeat/ipdetector/ipdetector.hpp"
#include "echeat/model.hpp"
#include "echeat/numerics.hpp"
