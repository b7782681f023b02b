// Copyright 2026 the longiseg authors
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

// Umbrella header: the whole longitudinal guided-segmentation toolkit.

#include "longiseg/components.hpp"
#include "longiseg/cvc.hpp"
#include "longiseg/error.hpp"
#include "longiseg/external_backend.hpp"
#include "longiseg/forest.hpp"
#include "longiseg/geometry.hpp"
#include "longiseg/landmarks.hpp"
#include "longiseg/manifest.hpp"
#include "longiseg/metrics.hpp"
#include "longiseg/oracle.hpp"
#include "longiseg/phantom.hpp"
#include "longiseg/pipeline.hpp"
#include "longiseg/resample.hpp"
#include "longiseg/rigid.hpp"
#include "longiseg/rng.hpp"
#include "longiseg/segmenter.hpp"
#include "longiseg/version.hpp"
#include "longiseg/volume.hpp"
#include "longiseg/volume_io.hpp"
