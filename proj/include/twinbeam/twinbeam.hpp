#pragma once

#include "twinbeam/covariance.hpp"
#include "twinbeam/criteria.hpp"
#include "twinbeam/channels.hpp"
#include "twinbeam/esd.hpp"
#include "twinbeam/ingest.hpp"
#include "twinbeam/io.hpp"
#include "twinbeam/random.hpp"
