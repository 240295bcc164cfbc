#pragma once

#include "echeat/model/checkpoint.hpp"
#include "echeat/model/layers.hpp"
#include "echeat/model/model.hpp"
#include "echeat/model/train.hpp"
