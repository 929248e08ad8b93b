#pragma once

// Umbrella header for the BD-RIS spectrum-sharing simulator library.

#include "bdris/ao.hpp"
#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/config.hpp"
#include "bdris/dris.hpp"
#include "bdris/harness.hpp"
#include "bdris/link_metrics.hpp"
#include "bdris/manifold.hpp"
#include "bdris/power_control.hpp"
#include "bdris/rng.hpp"
