#pragma once

#include "genlab/denormals.hpp"
#include "genlab/error.hpp"
#include "genlab/tensor.hpp"
#include "genlab/tape.hpp"
#include "genlab/gradient_check.hpp"
#include "genlab/nn/mlp.hpp"
#include "genlab/nn/optimizer.hpp"
#include "genlab/nn/softmax.hpp"
#include "genlab/models/model_kind.hpp"
#include "genlab/models/losses.hpp"
#include "genlab/models/trainers.hpp"
#include "genlab/data/rng.hpp"
#include "genlab/data/idx.hpp"
#include "genlab/data/batches.hpp"
#include "genlab/eval/entropy.hpp"
#include "genlab/eval/classifier.hpp"
#include "genlab/app/atomic_file.hpp"
#include "genlab/app/checkpoint.hpp"
#include "genlab/app/pgm.hpp"
#include "genlab/app/metrics_csv.hpp"
#include "genlab/app/run_config.hpp"
#include "genlab/app/cli.hpp"
