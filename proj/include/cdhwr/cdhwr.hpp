// Copyright 2026 The cdhwr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include "cdhwr/checkpoint.hpp"
#include "cdhwr/ctc.hpp"
#include "cdhwr/data.hpp"
#include "cdhwr/dct.hpp"
#include "cdhwr/gradcheck.hpp"
#include "cdhwr/image.hpp"
#include "cdhwr/input.hpp"
#include "cdhwr/metrics.hpp"
#include "cdhwr/network.hpp"
#include "cdhwr/ops.hpp"
#include "cdhwr/optim.hpp"
#include "cdhwr/preprocess.hpp"
#include "cdhwr/tape.hpp"
#include "cdhwr/tensor.hpp"
#include "cdhwr/train.hpp"
#include "cdhwr/vocab.hpp"
