#pragma once

#include "rmtmix/ensembles.hpp"
#include "rmtmix/error.hpp"
#include "rmtmix/evolution.hpp"
#include "rmtmix/fitting.hpp"
#include "rmtmix/linalg.hpp"
#include "rmtmix/matrices.hpp"
#include "rmtmix/rng.hpp"
#include "rmtmix/runner/artifact.hpp"
#include "rmtmix/runner/config.hpp"
#include "rmtmix/runner/cost.hpp"
#include "rmtmix/runner/experiment.hpp"
#include "rmtmix/runner/plots.hpp"
#include "rmtmix/short_time.hpp"
#include "rmtmix/spectra.hpp"
#include "rmtmix/spin_chain.hpp"
#include "rmtmix/statistics.hpp"
