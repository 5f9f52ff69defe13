#pragma once

#include "seqmatch/enhance.hpp"
#include "seqmatch/error.hpp"
#include "seqmatch/features.hpp"
#include "seqmatch/geometry.hpp"
#include "seqmatch/imgio.hpp"
#include "seqmatch/matchgeom.hpp"
#include "seqmatch/metrics.hpp"
#include "seqmatch/parallel.hpp"
#include "seqmatch/pipeline.hpp"
#include "seqmatch/random.hpp"
#include "seqmatch/report.hpp"
#include "seqmatch/synthgen.hpp"
