#pragma once

#include "garch_ugh/backtest.hpp"
#include "garch_ugh/chi2.hpp"
#include "garch_ugh/data.hpp"
#include "garch_ugh/error.hpp"
#include "garch_ugh/evt.hpp"
#include "garch_ugh/garch.hpp"
#include "garch_ugh/optimizer.hpp"
#include "garch_ugh/report.hpp"
#include "garch_ugh/var_engine.hpp"
