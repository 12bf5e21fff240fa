// Umbrella header: the full footprint-analysis toolkit.
#pragma once

#include "cryptoprint/base64.hpp"
#include "cryptoprint/clustering.hpp"
#include "cryptoprint/codec.hpp"
#include "cryptoprint/detector.hpp"
#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"
#include "cryptoprint/experiments.hpp"
#include "cryptoprint/features.hpp"
#include "cryptoprint/footprint.hpp"
#include "cryptoprint/metrics.hpp"
#include "cryptoprint/prng.hpp"
#include "cryptoprint/synth.hpp"
#include "cryptoprint/verdict.hpp"
