#pragma once

#include "kpbench/extractors/common.hpp"
#include "kpbench/extractors/rute.hpp"
#include "kpbench/extractors/yake.hpp"
