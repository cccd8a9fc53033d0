#pragma once

// Everything in the header-only core. The io and CLI layers are separate
// libraries (vecot/io.hpp, vecot/cli.hpp).
#include "vecot/chain.hpp"
#include "vecot/common.hpp"
#include "vecot/duality.hpp"
#include "vecot/lp.hpp"
#include "vecot/measures.hpp"
#include "vecot/random.hpp"
#include "vecot/scalar_ot.hpp"
#include "vecot/vector_ot.hpp"
