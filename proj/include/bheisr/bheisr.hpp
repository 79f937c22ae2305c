#pragma once

#include "bheisr/belief.hpp"
#include "bheisr/config.hpp"
#include "bheisr/corpus.hpp"
#include "bheisr/error.hpp"
#include "bheisr/experiments.hpp"
#include "bheisr/fbdmr.hpp"
#include "bheisr/features.hpp"
#include "bheisr/feed.hpp"
#include "bheisr/generator.hpp"
#include "bheisr/nudge.hpp"
#include "bheisr/pathfinder.hpp"
#include "bheisr/recommenders.hpp"
#include "bheisr/rng.hpp"
#include "bheisr/simulate.hpp"
#include "bheisr/stats.hpp"
#include "bheisr/synth.hpp"
#include "bheisr/text.hpp"
