#pragma once

#include "dccc/core.hpp"
#include "dccc/synthetic.hpp"
#include "dccc/encoder.hpp"
#include "dccc/distance.hpp"
#include "dccc/clustering.hpp"
#include "dccc/memory_bank.hpp"
#include "dccc/losses.hpp"
#include "dccc/sampler.hpp"
#include "dccc/metrics.hpp"
#include "dccc/config.hpp"
#include "dccc/io.hpp"
#include "dccc/trainer.hpp"
#include "dccc/sweep.hpp"
