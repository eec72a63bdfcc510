#pragma once

#include "cmsd/config.hpp"
#include "cmsd/error.hpp"
#include "cmsd/expression.hpp"
#include "cmsd/graphs.hpp"
#include "cmsd/intersection.hpp"
#include "cmsd/io.hpp"
#include "cmsd/model.hpp"
#include "cmsd/pipeline.hpp"
#include "cmsd/segment.hpp"
#include "cmsd/semiflow.hpp"
#include "cmsd/series.hpp"
#include "cmsd/spectral.hpp"
#include "cmsd/verify.hpp"
