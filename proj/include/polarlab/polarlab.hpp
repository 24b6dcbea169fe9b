#pragma once

#include "polarlab/cayley.hpp"
#include "polarlab/channel.hpp"
#include "polarlab/classify.hpp"
#include "polarlab/common.hpp"
#include "polarlab/mac.hpp"
#include "polarlab/partition.hpp"
#include "polarlab/polarize.hpp"
#include "polarlab/rng.hpp"
#include "polarlab/transform.hpp"
