#pragma once

#include "cointoss/accord.hpp"
#include "cointoss/classify.hpp"
#include "cointoss/core.hpp"
#include "cointoss/enumerate.hpp"
#include "cointoss/kernel2d.hpp"
#include "cointoss/reconstruct.hpp"
#include "cointoss/report.hpp"
