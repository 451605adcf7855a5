#pragma once

#include "perfect/error.hpp"
#include "perfect/rational.hpp"
#include "perfect/rng.hpp"
#include "perfect/chain.hpp"
#include "perfect/rule.hpp"
#include "perfect/poset.hpp"
#include "perfect/trajectory.hpp"
#include "perfect/imputation.hpp"
#include "perfect/detection.hpp"
#include "perfect/mtf.hpp"
#include "perfect/samplers.hpp"
#include "perfect/oracle.hpp"
#include "perfect/stats.hpp"
#include "perfect/chain_spec.hpp"
