#pragma once

#include "gplhy/bounds.hpp"
#include "gplhy/common.hpp"
#include "gplhy/diagnostics.hpp"
#include "gplhy/energy.hpp"
#include "gplhy/grid.hpp"
#include "gplhy/kernel.hpp"
#include "gplhy/minimize.hpp"
#include "gplhy/params.hpp"
#include "gplhy/report.hpp"
#include "gplhy/snapshot.hpp"
