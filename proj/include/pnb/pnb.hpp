#pragma once

#include "pnb/criteria.hpp"
#include "pnb/dataset.hpp"
#include "pnb/error.hpp"
#include "pnb/experiment.hpp"
#include "pnb/logmath.hpp"
#include "pnb/loss.hpp"
#include "pnb/nbmodel.hpp"
#include "pnb/random.hpp"
#include "pnb/report.hpp"
#include "pnb/search.hpp"
#include "pnb/synthetic.hpp"
#include "pnb/version.hpp"
