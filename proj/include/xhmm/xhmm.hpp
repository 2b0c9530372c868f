#pragma once

#include "xhmm/corpus_io.hpp"
#include "xhmm/decoder.hpp"
#include "xhmm/error.hpp"
#include "xhmm/evaluation.hpp"
#include "xhmm/lexicon.hpp"
#include "xhmm/model.hpp"
#include "xhmm/synth.hpp"
#include "xhmm/tagset.hpp"
#include "xhmm/training.hpp"
