#pragma once

#include "echoguard/attenuation.hpp"
#include "echoguard/audio.hpp"
#include "echoguard/config_json.hpp"
#include "echoguard/convolve.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/evolve.hpp"
#include "echoguard/fft.hpp"
#include "echoguard/jammer.hpp"
#include "echoguard/metrics/report.hpp"
#include "echoguard/metrics/stoi.hpp"
#include "echoguard/metrics/transcript.hpp"
#include "echoguard/metrics/wer.hpp"
#include "echoguard/oracle.hpp"
#include "echoguard/oscillation.hpp"
#include "echoguard/resample.hpp"
#include "echoguard/rng.hpp"
#include "echoguard/room.hpp"
#include "echoguard/version.hpp"
#include "echoguard/wav.hpp"
