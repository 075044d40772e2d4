#pragma once

// Umbrella header for the nilm library.

#include "nilm/csv.hpp"
#include "nilm/dataset.hpp"
#include "nilm/dataset_io.hpp"
#include "nilm/error.hpp"
#include "nilm/eval.hpp"
#include "nilm/feature_study.hpp"
#include "nilm/model_io.hpp"
#include "nilm/net.hpp"
#include "nilm/optim.hpp"
#include "nilm/report_io.hpp"
#include "nilm/rng.hpp"
#include "nilm/series.hpp"
#include "nilm/tensor.hpp"
#include "nilm/train.hpp"
#include "nilm/waveform.hpp"
#include "nilm/waveform_io.hpp"
