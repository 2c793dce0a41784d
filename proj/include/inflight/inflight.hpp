#pragma once

#include "inflight/core/decimal.hpp"
#include "inflight/core/log.hpp"
#include "inflight/core/random.hpp"
#include "inflight/core/serialize.hpp"
#include "inflight/core/types.hpp"
#include "inflight/validators/arith.hpp"
#include "inflight/validators/rules.hpp"
#include "inflight/validators/text.hpp"
#include "inflight/validators/validators.hpp"
#include "inflight/generators/backend.hpp"
#include "inflight/generators/chat_template.hpp"
#include "inflight/generators/http.hpp"
#include "inflight/generators/scripted.hpp"
#include "inflight/generators/simulator.hpp"
#include "inflight/dedup/judge.hpp"
#include "inflight/dedup/minhash.hpp"
#include "inflight/pipeline/pipeline.hpp"
#include "inflight/analytics/replay.hpp"
#include "inflight/analytics/theory.hpp"
#include "inflight/cli/commands.hpp"
#include "inflight/cli/config.hpp"
#include "inflight/cli/records.hpp"
