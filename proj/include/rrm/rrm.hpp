#ifndef RRM_RRM_HPP
#define RRM_RRM_HPP

#include "rrm/core.hpp"
#include "rrm/eval.hpp"
#include "rrm/io.hpp"
#include "rrm/judge.hpp"
#include "rrm/parallel.hpp"
#include "rrm/rating.hpp"
#include "rrm/remote_judge.hpp"
#include "rrm/rewards.hpp"
#include "rrm/rng.hpp"
#include "rrm/tournament.hpp"

#endif  // RRM_RRM_HPP
