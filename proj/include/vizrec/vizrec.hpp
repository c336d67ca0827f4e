#pragma once

#include "vizrec/errors.hpp"
#include "vizrec/dataset.hpp"
#include "vizrec/vizspec.hpp"
#include "vizrec/design_space.hpp"
#include "vizrec/traversal.hpp"
#include "vizrec/oracles.hpp"
#include "vizrec/recommender.hpp"
#include "vizrec/session.hpp"
#include "vizrec/bench.hpp"
