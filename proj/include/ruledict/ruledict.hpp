#pragma once

#include "ruledict/config.hpp"
#include "ruledict/dataset.hpp"
#include "ruledict/eval.hpp"
#include "ruledict/explain.hpp"
#include "ruledict/graph.hpp"
#include "ruledict/mine_bisear.hpp"
#include "ruledict/mine_car.hpp"
#include "ruledict/mine_ear.hpp"
#include "ruledict/mine_rofr.hpp"
#include "ruledict/parallel.hpp"
#include "ruledict/pipeline.hpp"
#include "ruledict/rule_io.hpp"
#include "ruledict/rules.hpp"
#include "ruledict/stats.hpp"
#include "ruledict/task_sets.hpp"
