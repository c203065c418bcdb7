#pragma once

#include "gecattack/attacks.hpp"
#include "gecattack/backends.hpp"
#include "gecattack/config.hpp"
#include "gecattack/core.hpp"
#include "gecattack/corpus_io.hpp"
#include "gecattack/http_chat.hpp"
#include "gecattack/metrics.hpp"
#include "gecattack/ranking.hpp"
#include "gecattack/similarity.hpp"
#include "gecattack/trueskill.hpp"
