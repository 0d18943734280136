#include "blockspt/special_math.hpp"
#include "blockspt/perr_pipeline.hpp"
#include "blockspt/finite_prob.hpp"
