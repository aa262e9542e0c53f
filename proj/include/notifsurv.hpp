#pragma once

#include "notifsurv/aft.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/evaluation.hpp"
#include "notifsurv/events.hpp"
#include "notifsurv/io.hpp"
#include "notifsurv/logistic.hpp"
#include "notifsurv/optimize.hpp"
#include "notifsurv/pipeline.hpp"
#include "notifsurv/policies.hpp"
#include "notifsurv/schema.hpp"
#include "notifsurv/scoring.hpp"
#include "notifsurv/simulator.hpp"
#include "notifsurv/survival.hpp"
