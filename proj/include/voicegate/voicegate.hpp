// voicegate/voicegate.hpp

// Copyright 2026  The voicegate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "voicegate/audio.hpp"
#include "voicegate/config.hpp"
#include "voicegate/error.hpp"
#include "voicegate/eval.hpp"
#include "voicegate/frontend.hpp"
#include "voicegate/hmm.hpp"
#include "voicegate/matrix.hpp"
#include "voicegate/speaker.hpp"
#include "voicegate/util.hpp"
