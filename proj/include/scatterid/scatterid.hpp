#pragma once

// Everything except file I/O (scatterid/io.hpp), which pulls in yaml-cpp.

#include "scatterid/channel.hpp"
#include "scatterid/corpus.hpp"
#include "scatterid/dataset.hpp"
#include "scatterid/detector.hpp"
#include "scatterid/distance.hpp"
#include "scatterid/errors.hpp"
#include "scatterid/experiments.hpp"
#include "scatterid/geometry.hpp"
#include "scatterid/hash.hpp"
#include "scatterid/metrics.hpp"
#include "scatterid/scenario.hpp"
#include "scatterid/signal.hpp"
#include "scatterid/tag_code.hpp"
