#pragma once

#include "ecgz/baselines.hpp"
#include "ecgz/bench.hpp"
#include "ecgz/bitcodec.hpp"
#include "ecgz/container.hpp"
#include "ecgz/decoder.hpp"
#include "ecgz/encoder.hpp"
#include "ecgz/error.hpp"
#include "ecgz/frame.hpp"
#include "ecgz/ingest.hpp"
#include "ecgz/predictor.hpp"
#include "ecgz/synthetic.hpp"
