#pragma once

#include "cutsurv/cv.hpp"
#include "cutsurv/dataset.hpp"
#include "cutsurv/errors.hpp"
#include "cutsurv/experiment.hpp"
#include "cutsurv/glm.hpp"
#include "cutsurv/io.hpp"
#include "cutsurv/kaplan_meier.hpp"
#include "cutsurv/loss.hpp"
#include "cutsurv/metrics.hpp"
#include "cutsurv/network.hpp"
#include "cutsurv/partition.hpp"
#include "cutsurv/random.hpp"
#include "cutsurv/simulate.hpp"
#include "cutsurv/train.hpp"
