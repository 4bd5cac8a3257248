#pragma once

#include <adlstm/adapt.hpp>
#include <adlstm/baselines.hpp>
#include <adlstm/common.hpp>
#include <adlstm/config.hpp>
#include <adlstm/data.hpp>
#include <adlstm/drift.hpp>
#include <adlstm/experiments.hpp>
#include <adlstm/metrics.hpp>
#include <adlstm/nnet.hpp>
#include <adlstm/report.hpp>
#include <adlstm/simdays.hpp>
