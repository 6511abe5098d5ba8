#pragma once

#include <bcmer/condensation.hpp>
#include <bcmer/config.hpp>
#include <bcmer/decision_tree.hpp>
#include <bcmer/environments.hpp>
#include <bcmer/errors.hpp>
#include <bcmer/evaluation.hpp>
#include <bcmer/experience.hpp>
#include <bcmer/nearest_boundary.hpp>
#include <bcmer/spatial.hpp>
#include <bcmer/teachers.hpp>
#include <bcmer/visualize.hpp>
