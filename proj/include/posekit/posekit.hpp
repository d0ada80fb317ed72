#pragma once

#include "posekit/alignment.hpp"
#include "posekit/assignment.hpp"
#include "posekit/data_io.hpp"
#include "posekit/errors.hpp"
#include "posekit/evaluation.hpp"
#include "posekit/losses.hpp"
#include "posekit/pose.hpp"
#include "posekit/suppression.hpp"
#include "posekit/synth.hpp"
