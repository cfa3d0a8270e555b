#pragma once

#include "quadbp/covers.hpp"
#include "quadbp/diagnostics.hpp"
#include "quadbp/engine.hpp"
#include "quadbp/gallery.hpp"
#include "quadbp/io.hpp"
#include "quadbp/model.hpp"
#include "quadbp/solvers.hpp"
#include "quadbp/sweep.hpp"
