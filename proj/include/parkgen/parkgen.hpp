#pragma once

#include "parkgen/error.hpp"
#include "parkgen/kv.hpp"
#include "parkgen/raster.hpp"
#include "parkgen/png_io.hpp"
#include "parkgen/random.hpp"
#include "parkgen/tensor.hpp"
#include "parkgen/autograd.hpp"
#include "parkgen/nets.hpp"
#include "parkgen/checkpoint.hpp"
#include "parkgen/optim.hpp"
#include "parkgen/synthcity.hpp"
#include "parkgen/gan.hpp"
#include "parkgen/diffusion.hpp"
#include "parkgen/metrics.hpp"
#include "parkgen/hash.hpp"
#include "parkgen/pipeline.hpp"
