#pragma once

#include "bound.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "denoiser.hpp"
#include "experiment.hpp"
#include "forward.hpp"
#include "mlp.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "stats.hpp"
#include "trainer.hpp"
#include "transport.hpp"
