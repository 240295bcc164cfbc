#pragma once

#include "echeat/numerics/adam.hpp"
#include "echeat/numerics/conv.hpp"
#include "echeat/numerics/dropout.hpp"
#include "echeat/numerics/gradcheck.hpp"
#include "echeat/numerics/linalg.hpp"
#include "echeat/numerics/loss.hpp"
#include "echeat/numerics/lstm.hpp"
#include "echeat/numerics/pca.hpp"
#include "echeat/numerics/prng.hpp"
#include "echeat/numerics/tensor.hpp"
