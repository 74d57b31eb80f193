// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtcan/autograd/ops_basic.hpp"
#include "rtcan/autograd/ops_conv.hpp"
#include "rtcan/autograd/ops_norm.hpp"
#include "rtcan/autograd/ops_resize.hpp"
#include "rtcan/autograd/variable.hpp"
