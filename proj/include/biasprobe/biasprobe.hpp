#pragma once

#include "biasprobe/config.hpp"
#include "biasprobe/dataset.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/expand.hpp"
#include "biasprobe/experiments.hpp"
#include "biasprobe/group_frequency.hpp"
#include "biasprobe/hashing.hpp"
#include "biasprobe/lexicon.hpp"
#include "biasprobe/metrics.hpp"
#include "biasprobe/prompt.hpp"
#include "biasprobe/remote_scorer.hpp"
#include "biasprobe/report_io.hpp"
#include "biasprobe/sample_id.hpp"
#include "biasprobe/scores.hpp"
#include "biasprobe/stats.hpp"
#include "biasprobe/templates.hpp"
#include "biasprobe/types.hpp"
