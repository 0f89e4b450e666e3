#pragma once

#include "eqb/approx.hpp"
#include "eqb/core.hpp"
#include "eqb/gallery.hpp"
#include "eqb/harness.hpp"
#include "eqb/pou.hpp"
#include "eqb/tagged_real.hpp"
