// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "samtrack/core.hpp"
#include "samtrack/state_estimation.hpp"
#include "samtrack/fused_feature.hpp"
#include "samtrack/assignment.hpp"
#include "samtrack/sct.hpp"
#include "samtrack/mct.hpp"
#include "samtrack/evaluation.hpp"
#include "samtrack/synth.hpp"
#include "samtrack/io.hpp"
#include "samtrack/pipeline.hpp"
