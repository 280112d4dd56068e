#pragma once

#include "vanish/errors.hpp"
#include "vanish/polycore.hpp"
#include "vanish/basis.hpp"
#include "vanish/knotting.hpp"
#include "vanish/pursuit.hpp"
#include "vanish/dataset.hpp"
#include "vanish/features.hpp"
#include "vanish/classifiers.hpp"
#include "vanish/experiments.hpp"
#include "vanish/generators.hpp"
#include "vanish/contour.hpp"
#include "vanish/serialize.hpp"
