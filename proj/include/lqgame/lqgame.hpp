#pragma once

#include "errors.hpp"
#include "core.hpp"
#include "riccati.hpp"
#include "synthesis.hpp"
#include "random.hpp"
#include "evaluation.hpp"
#include "deterministic.hpp"
#include "fixtures.hpp"
#include "io.hpp"
#include "cli.hpp"
