#pragma once

#include "mhotv/cgls.hpp"
#include "mhotv/config.hpp"
#include "mhotv/errors.hpp"
#include "mhotv/filters.hpp"
#include "mhotv/flops.hpp"
#include "mhotv/image.hpp"
#include "mhotv/io.hpp"
#include "mhotv/metrics.hpp"
#include "mhotv/operators.hpp"
#include "mhotv/radon.hpp"
#include "mhotv/report.hpp"
#include "mhotv/signals.hpp"
#include "mhotv/solvers.hpp"
#include "mhotv/spectral.hpp"
#include "mhotv/stencil.hpp"
#include "mhotv/studies.hpp"
#include "mhotv/sweep.hpp"
#include "mhotv/transform.hpp"
#include "mhotv/wavelet.hpp"
